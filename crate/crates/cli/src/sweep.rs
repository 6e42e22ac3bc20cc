//! Deterministic parameter sweeps: cross-product grids over named scenario
//! parameters, cells executed on any number of worker threads with the
//! output rows always in cross-product order (first `--param` outermost).

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{bail, Context, Result};

use v2psim::scenario::{fmt_sig9, run, Outcome, ScenarioConfig};

/// Names accepted by `--param`.
pub const SWEEPABLE: &[&str] = &[
    "risk.zone_half_extent",
    "risk.ttz_diff_threshold",
    "risk.severity_1_2_threshold",
    "risk.severity_2_3_threshold",
    "risk.engagement_horizon",
    "risk.min_speed_epsilon",
    "channel.broadcast_period",
    "channel.latency_mean",
    "channel.latency_jitter",
    "channel.drop_probability",
    "brake.level1_decel",
    "brake.level2_decel",
    "brake.level3_decel",
    "brake.actuator_tau",
    "vehicle.cruise_speed",
    "sensor.range",
    "ped.start_delay",
];

/// One swept axis: `name=start:stop:step`, stop inclusive.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepParam {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl SweepParam {
    pub fn parse(spec: &str) -> Result<SweepParam> {
        let (name, range) = spec
            .split_once('=')
            .with_context(|| format!("expected name=start:stop:step, got `{spec}`"))?;
        if !SWEEPABLE.contains(&name) {
            bail!("unknown sweep parameter `{name}` (known: {})", SWEEPABLE.join(", "));
        }
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            bail!("range for `{name}` must be start:stop:step, got `{range}`");
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("non-numeric range bound in `{spec}`"))?;
        let param = SweepParam {
            name: name.to_string(),
            start: nums[0],
            stop: nums[1],
            step: nums[2],
        };
        if param.values().is_empty() {
            bail!("range `{range}` for `{name}` produces no values");
        }
        Ok(param)
    }

    /// Grid points from start to stop inclusive.
    pub fn values(&self) -> Vec<f64> {
        if !(self.step > 0.0 && self.step.is_finite())
            || !self.start.is_finite()
            || !self.stop.is_finite()
            || self.stop < self.start
        {
            return Vec::new();
        }
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

/// Sets one named parameter on a scenario config.
pub fn apply_param(cfg: &mut ScenarioConfig, name: &str, value: f64) -> Result<()> {
    match name {
        "risk.zone_half_extent" => cfg.risk.zone_half_extent = value,
        "risk.ttz_diff_threshold" => cfg.risk.ttz_diff_threshold = value,
        "risk.severity_1_2_threshold" => cfg.risk.severity_1_2_threshold = value,
        "risk.severity_2_3_threshold" => cfg.risk.severity_2_3_threshold = value,
        "risk.engagement_horizon" => cfg.risk.engagement_horizon = value,
        "risk.min_speed_epsilon" => cfg.risk.min_speed_epsilon = value,
        "channel.broadcast_period" => cfg.channel.broadcast_period = value,
        "channel.latency_mean" => cfg.channel.latency_mean = value,
        "channel.latency_jitter" => cfg.channel.latency_jitter = value,
        "channel.drop_probability" => cfg.channel.drop_probability = value,
        "brake.level1_decel" => cfg.vehicle.brake.level1_decel = value,
        "brake.level2_decel" => cfg.vehicle.brake.level2_decel = value,
        "brake.level3_decel" => cfg.vehicle.brake.level3_decel = value,
        "brake.actuator_tau" => cfg.vehicle.brake.actuator_tau = value,
        "vehicle.cruise_speed" => cfg.vehicle.cruise_speed = value,
        "sensor.range" => cfg.sensor.range = value,
        // shifts every profile segment of every pedestrian
        "ped.start_delay" => {
            for p in &mut cfg.pedestrians {
                for seg in &mut p.profile {
                    seg.start_time += value;
                }
            }
        }
        other => bail!("unknown sweep parameter `{other}`"),
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub outcome: Outcome,
}

/// Runs the cross product of the given axes. Cells are pre-validated, then
/// executed by `workers` threads; row order is the deterministic
/// cross-product order regardless of execution interleaving.
pub fn run_sweep(
    base: &ScenarioConfig,
    params: &[SweepParam],
    workers: usize,
) -> Result<Vec<SweepRow>> {
    if params.is_empty() {
        bail!("sweep needs at least one --param");
    }
    let axes: Vec<Vec<f64>> = params.iter().map(SweepParam::values).collect();
    let total: usize = axes.iter().map(Vec::len).product();

    // materialize cells in cross-product order, first axis outermost
    let mut cells: Vec<(Vec<f64>, ScenarioConfig)> = Vec::with_capacity(total);
    for flat in 0..total {
        let mut rest = flat;
        let mut values = vec![0.0; axes.len()];
        for (i, axis) in axes.iter().enumerate().rev() {
            values[i] = axis[rest % axis.len()];
            rest /= axis.len();
        }
        let mut cfg = base.clone();
        for (p, &v) in params.iter().zip(values.iter()) {
            apply_param(&mut cfg, &p.name, v)?;
        }
        cfg.validate().map_err(|e| {
            anyhow::anyhow!("sweep cell {:?} produces an invalid scenario: {e}", values)
        })?;
        cells.push((values, cfg));
    }

    let workers = workers.max(1);
    let next = AtomicUsize::new(0);
    let results: Vec<Mutex<Option<SweepRow>>> = (0..total).map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers.min(total.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= total {
                    break;
                }
                let (values, cfg) = &cells[i];
                let (_, outcome) = run(cfg);
                *results[i].lock().unwrap() = Some(SweepRow {
                    values: values.clone(),
                    outcome,
                });
            });
        }
    });
    Ok(results
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("all cells executed"))
        .collect())
}

/// Writes `sweep.csv`: one column per swept parameter, then the outcome
/// fields. Absent times render as `-`.
pub fn write_sweep_csv<W: Write>(params: &[SweepParam], rows: &[SweepRow], mut w: W) -> Result<u64> {
    let mut out = String::new();
    for p in params {
        out.push_str(&p.name);
        out.push(',');
    }
    out.push_str("collided,stopped,min_separation,max_severity,first_brake_time,stop_time\n");
    for row in rows {
        for v in &row.values {
            out.push_str(&fmt_sig9(*v));
            out.push(',');
        }
        let o = &row.outcome;
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            u8::from(o.collided),
            u8::from(o.stopped),
            fmt_sig9(o.min_separation),
            o.max_severity,
            o.first_brake_time.map_or("-".into(), fmt_sig9),
            o.stop_time.map_or("-".into(), fmt_sig9),
        ));
    }
    w.write_all(out.as_bytes())?;
    Ok(out.len() as u64)
}
