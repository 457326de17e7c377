//! CSV emission. Floats use Rust's shortest round-trip formatting, so equal
//! bits give equal bytes.

use std::fmt::Write as _;

use ito_edgeworth::estimator::{CltCheck, ExperimentReport};

/// Version of the report layout.
pub const SCHEMA: u32 = 1;

pub const REPORT_HEADER: &str = "model,f,T,n,m,paths,mode,mc_mean,mc_stderr,zeroth_mean,zeroth_stderr,expansion_mean,expansion_stderr,a1_mean,a3_mean,a5_mean,v0_mean,scaled_residual,scaled_residual_stderr";

pub const CLT_HEADER: &str = "n,paths,empirical_var,empirical_stderr,predicted,ratio";

pub fn report_csv(report: &ExperimentReport) -> String {
    let mut out = String::new();
    writeln!(out, "# schema={SCHEMA}").unwrap();
    writeln!(out, "# partition=uniform(T/n)").unwrap();
    writeln!(out, "# hypotheses={}", report.hypotheses).unwrap();
    let class = if report.diagnostic_only { "diagnostic_only" } else { "bounded_smooth" };
    writeln!(out, "# f_class={class}").unwrap();
    writeln!(out, "# seed={} antithetic={}", report.seed, report.antithetic).unwrap();
    out.push_str(REPORT_HEADER);
    out.push('\n');
    for r in &report.rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            report.model,
            report.f,
            report.horizon,
            r.n,
            r.m,
            r.paths,
            report.mode.as_str(),
            r.mc.mean,
            r.mc.stderr,
            r.zeroth.mean,
            r.zeroth.stderr,
            r.expansion.mean,
            r.expansion.stderr,
            r.a1.mean,
            r.a3.mean,
            r.a5.mean,
            r.v0.mean,
            r.scaled_residual,
            r.scaled_residual_stderr,
        )
        .unwrap();
    }
    out
}

pub fn clt_csv(model: &str, checks: &[CltCheck]) -> String {
    let mut out = String::new();
    writeln!(out, "# schema={SCHEMA}").unwrap();
    writeln!(out, "# model={model}").unwrap();
    out.push_str(CLT_HEADER);
    out.push('\n');
    for c in checks {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            c.n,
            c.paths,
            c.empirical_var.mean,
            c.empirical_var.stderr,
            c.predicted.mean,
            c.ratio()
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ito_edgeworth::estimator::{convergence_study, FineSteps, McConfig};
    use ito_edgeworth::hermite::TestFunction;
    use ito_edgeworth::model::GModel;

    #[test]
    fn layout() {
        let report = convergence_study(
            &GModel::brownian_identity(),
            &TestFunction::Monomial { j: 3 },
            &[4, 16],
            FineSteps::Fixed(8),
            1.0,
            &McConfig::new(1, 200),
        )
        .unwrap();
        let csv = report_csv(&report);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# schema=1");
        assert_eq!(lines[1], "# partition=uniform(T/n)");
        assert_eq!(lines[3], "# f_class=diagnostic_only");
        assert_eq!(lines[5], REPORT_HEADER);
        assert_eq!(lines.len(), 8);
        let row: Vec<&str> = lines[7].split(',').collect();
        assert_eq!(row.len(), REPORT_HEADER.split(',').count());
        assert_eq!(&row[..7], ["brownian_identity", "monomial(j=3)", "1", "16", "8", "200", "coupled"]);
        assert_eq!(row[11], "0.25");
    }
}
