//! Parameter sweeps that regenerate the figure data as CSV.

mod config;

pub use config::{
    db_to_linear, linear_grid, linear_to_db, log_grid, BaseParams, ConfigError, ExperimentSpec, FigureName,
    MonteCarloSpec, ParamOverrides, Resolved, SweepSpec, SweepVar, BASELINE,
};

use crate::channel::{product_cdf, product_cdf_tail_approx, product_cdf_tail_power, FadingParams, SystemParams};
use crate::montecarlo::simulate_evaluation;
use crate::schemes::{evaluate, ftr_chi, ftr_n_star_ratio, ftr_optimal_blocklengths, ReliabilityTarget};
use crate::Error;
use rayon::prelude::*;
use std::fmt;
use std::io::Write;

#[derive(Debug)]
pub enum ExperimentError {
    Config(ConfigError),
    Numeric(Error),
    Io(std::io::Error),
}

impl fmt::Display for ExperimentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentError::Config(e) => write!(f, "{e}"),
            ExperimentError::Numeric(e) => write!(f, "{e}"),
            ExperimentError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for ExperimentError {}

impl From<ConfigError> for ExperimentError {
    fn from(e: ConfigError) -> Self {
        ExperimentError::Config(e)
    }
}

impl From<Error> for ExperimentError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParam { .. } => ExperimentError::Config(ConfigError(e.to_string())),
            other => ExperimentError::Numeric(other),
        }
    }
}

impl From<std::io::Error> for ExperimentError {
    fn from(e: std::io::Error) -> Self {
        ExperimentError::Io(e)
    }
}

/// One row per grid point; `None` cells are written empty.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub comment: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Option<String>>>,
}

impl SweepResult {
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parsed numeric value at (row, column name).
    pub fn value(&self, row: usize, name: &str) -> Option<f64> {
        let c = self.column(name)?;
        self.rows.get(row)?.get(c)?.as_deref()?.parse().ok()
    }
}

/// Shortest round-trip text, switching to exponent form far from unity.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

fn cell(x: f64) -> Option<String> {
    Some(fmt_f64(x))
}

fn point_params(base: &BaseParams, var: SweepVar, x: f64) -> BaseParams {
    let mut b = *base;
    match var {
        SweepVar::PsiDb => b.psi = db_to_linear(x),
        SweepVar::N => {
            let delta = base.n + base.v;
            b.n = x as u32;
            b.v = delta - b.n;
        }
        SweepVar::V => b.v = x as u32,
        SweepVar::EpsTh => b.eps_th = x,
        SweepVar::Antennas => b.antennas = x as u32,
        SweepVar::K0 => b.k0 = x as u32,
        SweepVar::M1 => b.m1 = x,
        SweepVar::M2 => b.m2 = x,
        SweepVar::Chi | SweepVar::W => {}
    }
    b
}

fn system(b: &BaseParams) -> Result<(SystemParams, ReliabilityTarget), Error> {
    let fp = FadingParams::new(b.m1, b.m2, b.antennas)?;
    Ok((
        SystemParams::new(fp, b.psi, b.v, b.n)?,
        ReliabilityTarget::new(b.eps_th, b.k0)?,
    ))
}

const SCHEME_COLS: [&str; 6] = ["feasible", "k", "kbar", "p_k0", "threshold", "eps_star"];
const MC_COLS: [&str; 6] = [
    "mc_error_rate",
    "mc_ci99",
    "mc_kbar",
    "mc_kbar_se",
    "mc_p_k0",
    "mc_p_k0_se",
];

fn header(r: &Resolved) -> Vec<String> {
    let var = r.var.name().to_string();
    match r.var {
        SweepVar::Chi => vec![var, "n_star".into(), "v_star".into(), "n_star_ratio".into()],
        SweepVar::W => ["cdf_exact", "cdf_tail_power", "cdf_tail_approx", "rel_err_approx"]
            .iter()
            .fold(vec![var], |mut h, c| {
                h.push(c.to_string());
                h
            }),
        _ => {
            let mut h = vec![var, "n".into(), "v".into(), "psi".into(), "n_star".into()];
            for (s, f) in &r.schemes {
                let cols = SCHEME_COLS
                    .iter()
                    .chain(if r.mc.is_some() { MC_COLS.iter() } else { [].iter() });
                h.extend(cols.map(|c| format!("{s}_{f}_{c}")));
            }
            h
        }
    }
}

fn chi_row(r: &Resolved, chi: f64) -> Result<Vec<Option<String>>, Error> {
    let delta = r.base.n + r.base.v;
    let (n, v) = ftr_optimal_blocklengths(delta, chi)?;
    Ok(vec![
        cell(chi),
        cell(n as f64),
        cell(v as f64),
        cell(ftr_n_star_ratio(chi)?),
    ])
}

fn w_row(r: &Resolved, w: f64) -> Result<Vec<Option<String>>, Error> {
    let fp = FadingParams::new(r.base.m1, r.base.m2, r.base.antennas)?;
    let exact = product_cdf(&fp, w);
    let ap1 = product_cdf_tail_power(&fp, w).ok();
    let ap2 = product_cdf_tail_approx(&fp, w).ok();
    let rel = ap2.map(|a| ((a - exact) / exact).abs());
    Ok(vec![
        cell(w),
        cell(exact),
        ap1.and_then(cell),
        ap2.and_then(cell),
        rel.and_then(cell),
    ])
}

fn scheme_row(r: &Resolved, x: f64) -> Result<Vec<Option<String>>, Error> {
    let b = point_params(&r.base, r.var, x);
    let (sp, rt) = system(&b)?;
    let n_star = ftr_chi(&sp, rt.eps_th, b.inverse)
        .and_then(|chi| ftr_optimal_blocklengths(b.n + b.v, chi))
        .map(|(n, _)| n as f64)
        .ok();
    let mut row = vec![
        cell(x),
        cell(b.n as f64),
        cell(b.v as f64),
        cell(b.psi),
        n_star.and_then(cell),
    ];
    for &(scheme, form) in &r.schemes {
        let eval = evaluate(&sp, &rt, scheme, form, b.inverse)?;
        let o = eval.outcome;
        row.push(Some(o.feasible.to_string()));
        if !o.feasible {
            let blanks = SCHEME_COLS.len() - 1 + if r.mc.is_some() { MC_COLS.len() } else { 0 };
            row.extend(std::iter::repeat_n(None, blanks));
            continue;
        }
        row.push(cell(o.k_bits));
        row.push(cell(o.kbar));
        row.push(cell(o.p_k0));
        row.push(eval.threshold.and_then(|t| cell(t.threshold)));
        row.push(eval.threshold.and_then(|t| cell(t.eps_star)));
        if let Some((trials, seed)) = r.mc {
            let rep = simulate_evaluation(&sp, &rt, &eval, trials, seed)?;
            row.push(rep.error_rate.and_then(cell));
            row.push(rep.error_rate.and(cell(rep.error_ci99)));
            row.push(cell(rep.kbar_hat));
            row.push(cell(rep.kbar_se));
            row.push(cell(rep.p_k0_hat));
            row.push(cell(rep.p_k0_se));
        }
    }
    Ok(row)
}

fn comment(r: &Resolved) -> String {
    let b = &r.base;
    let schemes: Vec<String> = r.schemes.iter().map(|(s, f)| format!("{s}:{f}")).collect();
    let mut c = format!(
        "# wpcn {} experiment={} sweep={} points={} m1={} m2={} antennas={} n={} v={} psi={} k0={} eps_th={} inverse={} schemes={}",
        env!("CARGO_PKG_VERSION"),
        r.name.name(),
        r.var.name(),
        r.grid.len(),
        fmt_f64(b.m1),
        fmt_f64(b.m2),
        b.antennas,
        b.n,
        b.v,
        fmt_f64(b.psi),
        b.k0,
        fmt_f64(b.eps_th),
        b.inverse.name(),
        schemes.join(";"),
    );
    match r.mc {
        Some((trials, seed)) => c.push_str(&format!(" mc_trials={trials} seed={seed}")),
        None => c.push_str(" mc=off"),
    }
    c
}

/// Evaluates every grid point (concurrently) and returns rows in grid order.
pub fn run_experiment(r: &Resolved) -> Result<SweepResult, ExperimentError> {
    let rows: Vec<Result<Vec<Option<String>>, Error>> = r
        .grid
        .par_iter()
        .map(|&x| match r.var {
            SweepVar::Chi => chi_row(r, x),
            SweepVar::W => w_row(r, x),
            _ => scheme_row(r, x),
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult {
        comment: comment(r),
        header: header(r),
        rows,
    })
}

/// Comment line, header and rows; ',' separated, LF terminated.
pub fn emit_csv<W: Write>(result: &SweepResult, mut out: W) -> Result<(), ExperimentError> {
    writeln!(out, "{}", result.comment)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let io = |e: csv::Error| ExperimentError::Io(e.into());
    w.write_record(&result.header).map_err(io)?;
    for row in &result.rows {
        w.write_record(row.iter().map(|c| c.as_deref().unwrap_or("")))
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn resolve(text: &str) -> Resolved {
        ExperimentSpec::parse(text).unwrap().resolve().unwrap()
    }

    #[test]
    fn fig2_hits_the_limit() {
        let r = resolve("name = \"fig2\"");
        let out = run_experiment(&r).unwrap();
        let row = r.grid.iter().position(|&c| c == 1.0).unwrap();
        let ratio = out.value(row, "n_star_ratio").unwrap();
        assert!((ratio - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(out.rows.len(), r.grid.len());
    }

    #[test]
    fn infeasible_cells_are_empty() {
        let r = resolve("schemes = [\"ftr:asymptotic\"]\n[params]\neps_th = 1e-4\n[sweep]\nvar = \"psi_db\"\nvalues = [-10.0, 10.0]\n");
        let out = run_experiment(&r).unwrap();
        let f = out.column("ftr_asymptotic_feasible").unwrap();
        let k = out.column("ftr_asymptotic_kbar").unwrap();
        assert_eq!(out.rows[0][f].as_deref(), Some("false"));
        assert_eq!(out.rows[0][k], None);
        assert_eq!(out.rows[1][f].as_deref(), Some("true"));
        assert!(out.rows[1][k].is_some());
    }

    #[test]
    fn csv_is_deterministic() {
        let text = "schemes = [\"ksc:asymptotic\", \"fcsi:asymptotic\"]\n[sweep]\nvar = \"antennas\"\nvalues = [2.0, 3.0]\n[montecarlo]\ntrials = 2000\nseed = 5\n";
        let emit = || {
            let mut buf = Vec::new();
            emit_csv(&run_experiment(&resolve(text)).unwrap(), &mut buf).unwrap();
            String::from_utf8(buf).unwrap()
        };
        let a = emit();
        assert_eq!(a, emit());
        assert!(a.starts_with("# wpcn"));
        assert!(a.contains("seed=5"));
        assert!(!a.contains('\r'));
        assert_eq!(a.lines().count(), 4);
        let header = a.lines().nth(1).unwrap();
        assert!(header.contains("ksc_asymptotic_mc_kbar"));
    }

    #[test]
    fn fig8_columns() {
        let r = resolve("name = \"fig8\"\n[params]\nantennas = 4\n[sweep]\nvalues = [0.001, 0.01]\n");
        let out = run_experiment(&r).unwrap();
        let rel = out.value(0, "rel_err_approx").unwrap();
        assert!(rel < out.value(1, "rel_err_approx").unwrap());
        // tie m₂M = m₁ has no approximation
        let r = resolve("name = \"fig8\"\n[params]\nm1 = 4.0\nantennas = 2\n[sweep]\nvalues = [0.01]\n");
        let out = run_experiment(&r).unwrap();
        assert!(out.value(0, "cdf_exact").is_some());
        assert_eq!(out.value(0, "cdf_tail_approx"), None);
    }

    #[test]
    fn fmt_switches_to_exponent() {
        assert_eq!(fmt_f64(0.5), "0.5");
        assert_eq!(fmt_f64(1e-7), "1e-7");
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(123.25), "123.25");
    }
}
