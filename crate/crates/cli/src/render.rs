//! Plain-text tables for `--format table`.

use std::fmt::Write;

use longmem::mc::{BiasStudy, CriticalValues, NullPanel, PowerResult, Tail, Variant};
use longmem::rra::RraResult;

use crate::report::{AnalysisReport, ArmReport, InputMeta, PrefilterSummary, ScaleStats};

const REPORTED: [f64; 6] = [0.005, 0.025, 0.05, 0.95, 0.975, 0.995];

fn opt(v: Option<f64>, prec: usize) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.prec$}"))
}

fn input_line(out: &mut String, m: &InputMeta) {
    let range = match (m.first_date, m.last_date) {
        (Some(a), Some(b)) => format!(", {a} to {b}"),
        _ => String::new(),
    };
    let _ = writeln!(
        out,
        "input: {} ({}, {} returns{range})",
        m.path.display(),
        m.kind,
        m.n_returns
    );
}

pub fn scales(out: &mut String, rows: &[ScaleStats]) {
    let _ = writeln!(
        out,
        "{:<10} {:>6} {:>11} {:>10} {:>9} {:>9} | {:>9} {:>9}",
        "scale", "obs", "mean", "std dev", "skew", "kurt", "shuf skew", "shuf kurt"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<10} {:>6} {:>11.6} {:>10.6} {:>9} {:>9} | {:>9} {:>9}",
            r.scale,
            r.observations,
            r.raw.mean,
            r.raw.std_dev,
            opt(r.raw.skewness, 3),
            opt(r.raw.kurtosis, 3),
            opt(r.shuffled.skewness, 3),
            opt(r.shuffled.kurtosis, 3),
        );
    }
}

pub fn prefilter(out: &mut String, p: &PrefilterSummary) {
    if let (Some(pacf), Some(t)) = (&p.pacf, p.threshold) {
        let _ = writeln!(out, "{:>4} {:>9}  (band ±{t:.4})", "lag", "pacf");
        for (i, v) in pacf.iter().enumerate() {
            let mark = if p.selected_lags.contains(&(i + 1)) {
                " *"
            } else {
                ""
            };
            let _ = writeln!(out, "{:>4} {v:>9.4}{mark}", i + 1);
        }
    }
    if p.selected_lags.is_empty() {
        let _ = writeln!(out, "no AR terms fitted");
    } else {
        let terms: Vec<String> = p
            .coefficients
            .iter()
            .map(|(k, c)| format!("phi{k} = {c:.4}"))
            .collect();
        let _ = writeln!(
            out,
            "AR fit: {}, intercept = {:.6}, {} residuals",
            terms.join(", "),
            p.intercept,
            p.residual_length
        );
    }
}

fn quantile_header(out: &mut String, first: &str) {
    let _ = write!(out, "{first:<14} {:>9} {:>9}", "estimate", "null mean");
    for q in REPORTED {
        let _ = write!(out, " {:>7}", format!("q{q}"));
    }
    let _ = writeln!(out);
}

fn arm(out: &mut String, label: &str, a: &ArmReport) {
    let _ = writeln!(out, "{label} (N = {})", a.n_obs);
    for (v, t) in &a.tests {
        let cv = a.critical_values.panel.get(*v);
        let _ = write!(
            out,
            "  {:<12} {:>9} {:>9.4}",
            v.name(),
            format!("{:.4}{}", t.estimate, t.significance.stars()),
            cv.mean
        );
        for q in REPORTED {
            let _ = write!(out, " {:>7}", opt(cv.quantile(q), 4));
        }
        let _ = writeln!(out);
        for w in &t.warnings {
            let _ = writeln!(out, "    warning: {w}");
        }
    }
}

pub fn analysis(r: &AnalysisReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", r.tool.name, r.tool.version);
    input_line(&mut out, &r.input);
    let _ = writeln!(
        out,
        "\nDescriptive statistics (shuffle seed {})",
        r.shuffle_seed
    );
    scales(&mut out, &r.describe);
    let _ = writeln!(out, "\nPrefilter ({:?})", r.prefilter.mode);
    prefilter(&mut out, &r.prefilter);
    let _ = writeln!(
        out,
        "\nRescaled range analysis, knot {}, {} null replications, seed {}",
        r.options.estimator.knot, r.options.replications, r.options.seed
    );
    quantile_header(&mut out, "");
    arm(&mut out, "unfiltered", &r.unfiltered);
    arm(&mut out, "filtered", &r.filtered);
    let tail = match r.options.tail {
        Tail::Upper => "upper-tail",
        Tail::TwoSided => "two-sided",
    };
    let _ = writeln!(
        out,
        "\n*** / ** / * : {tail} rejection at 0.01 / 0.05 / 0.10"
    );
    out
}

pub fn rra(r: &RraResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>5} {:>8} {:>10} {:>6}", "n", "ln n", "ln R/S", "2M");
    for p in &r.points {
        let _ = writeln!(
            out,
            "{:>5} {:>8.4} {:>10.5} {:>6}",
            p.n,
            (p.n as f64).ln(),
            p.rs.ln(),
            p.subperiods
        );
    }
    let _ = writeln!(out, "H   = {:.4}", r.h);
    if let Some(s) = r.split {
        let _ = writeln!(out, "H_S = {:.4}  (n <= {})", s.h_short, s.knot);
        let _ = writeln!(out, "H_L = {:.4}  (n >= {})", s.h_long, s.knot);
    }
    out
}

fn cv_row(out: &mut String, cv: &CriticalValues) {
    let _ = write!(
        out,
        "{:<6} {:>8.4} {:>8.4}",
        cv.variant.name(),
        cv.mean,
        cv.sd
    );
    for q in &cv.quantiles {
        let _ = write!(out, " {:>7.4}", q.value);
    }
    let _ = writeln!(out);
}

pub fn panel(p: &NullPanel) -> String {
    let mut out = String::new();
    let c = &p.h.config;
    let _ = writeln!(
        out,
        "Null panel: T = {}, {} replications ({} failed), seed {}",
        c.series_length, c.replications, p.h.failed, c.master_seed
    );
    let _ = write!(out, "{:<6} {:>8} {:>8}", "", "mean", "sd");
    for q in &p.h.quantiles {
        let _ = write!(out, " {:>7}", format!("q{}", q.p));
    }
    let _ = writeln!(out);
    for v in Variant::ALL {
        cv_row(&mut out, p.get(v));
    }
    out
}

pub fn power(p: &PowerResult) -> String {
    let mut out = String::new();
    let _ = write!(out, "{:>6}", "H");
    for t in &p.config.lengths {
        let _ = write!(out, " {:>8}", format!("T={t}"));
    }
    let _ = writeln!(out);
    for &h in &p.config.h_grid {
        let _ = write!(out, "{h:>6.3}");
        for &t in &p.config.lengths {
            let _ = write!(out, " {:>8}", opt(p.rate(h, t), 3));
        }
        let _ = writeln!(out);
    }
    out
}

pub fn bias(b: &BiasStudy) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "T = {}, {} replications, seed {}, filter {:?}",
        b.config.series_length, b.config.replications, b.config.master_seed, b.config.filter
    );
    let _ = writeln!(
        out,
        "{:>6} {:<18} {:>17} {:>17}",
        "d", "AR", "unfiltered", "filtered"
    );
    for r in &b.rows {
        let ar: Vec<String> = r.spec.ar.iter().map(|(k, c)| format!("{k}:{c}")).collect();
        let _ = writeln!(
            out,
            "{:>6.3} {:<18} {:>8.4} ({:.4}) {:>8.4} ({:.4})",
            r.spec.d,
            if ar.is_empty() {
                "-".into()
            } else {
                ar.join(",")
            },
            r.unfiltered.mean,
            r.unfiltered.sd,
            r.filtered.mean,
            r.filtered.sd
        );
    }
    out
}

pub fn describe(input: &InputMeta, rows: &[ScaleStats]) -> String {
    let mut out = String::new();
    input_line(&mut out, input);
    scales(&mut out, rows);
    out
}
