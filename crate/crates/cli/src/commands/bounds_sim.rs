use eib_core::bounds::{self, SimulationConfig, SimulationResult};

use super::{OutputFile, RunOutput};
use crate::config::BoundsSimConfig;
use crate::error::CliError;
use crate::svg::{self, Series};

pub fn run(cfg: &BoundsSimConfig) -> Result<RunOutput, CliError> {
    let mut out = RunOutput::default();
    let mut lines = Vec::new();
    for &generator in &cfg.generators {
        let sim = SimulationConfig {
            ms: cfg.ms.clone(),
            trials: cfg.trials,
            seed: cfg.seed,
            generator,
            delta: cfg.delta,
            x_card: cfg.x_card,
            t_card: cfg.t_card,
            y_card: cfg.y_card,
        };
        let result = bounds::bound_simulation(&sim)?;
        let name = generator.name();
        let log_m = |m: u64| (m as f64).log10();
        let curve = |bound: &str, f: &dyn Fn(&bounds::SummaryRow) -> f64| -> Series {
            Series::new(
                bound,
                result.summary.iter().filter(|r| r.bound == bound).map(|r| (log_m(r.m), f(r))).collect(),
            )
        };
        let errors = svg::line_chart(
            &format!("Constraint violation rate ({name} generator)"),
            "log10 m",
            "error rate",
            &[curve("ours", &|r| r.error_rate), curve("previous", &|r| r.error_rate)],
        );
        let means = svg::line_chart(
            &format!("Mean bound value ({name} generator)"),
            "log10 m",
            "bound",
            &[
                curve("ours", &|r| r.mean_value.unwrap_or(f64::NAN)),
                curve("previous", &|r| r.mean_value.unwrap_or(f64::NAN)),
            ],
        );
        out.files.push(OutputFile::text(format!("bounds_trials_{name}.csv"), result.trials_csv()));
        out.files.push(OutputFile::text(format!("bounds_summary_{name}.csv"), result.summary_csv()));
        out.files.push(OutputFile::text(format!("bounds_error_rate_{name}.svg"), errors));
        out.files.push(OutputFile::text(format!("bounds_mean_{name}.svg"), means));
        lines.push(describe(name, &result));
    }
    out.report = lines.join("\n");
    Ok(out)
}

fn describe(name: &str, result: &SimulationResult) -> String {
    let first_ok = |bound: &str| {
        result
            .summary
            .iter()
            .find(|r| r.bound == bound && r.error_rate == 0.0)
            .map_or("never".to_string(), |r| format!("m = {}", r.m))
    };
    format!(
        "{name}: constraints always hold from {} (ours), {} (previous)",
        first_ok("ours"),
        first_ok("previous")
    )
}
