use crate::schemes::{Form, InverseMethod, Scheme};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::path::Path;

/// Problems with the experiment description itself (exit code 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn bad(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FigureName {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    #[default]
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    Chi,
    PsiDb,
    /// WIT blocklength, with δ = n + v held fixed.
    N,
    /// WET blocklength, with n held fixed.
    V,
    EpsTh,
    Antennas,
    K0,
    M1,
    M2,
    W,
}

impl SweepVar {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVar::Chi => "chi",
            SweepVar::PsiDb => "psi_db",
            SweepVar::N => "n",
            SweepVar::V => "v",
            SweepVar::EpsTh => "eps_th",
            SweepVar::Antennas => "antennas",
            SweepVar::K0 => "k0",
            SweepVar::M1 => "m1",
            SweepVar::M2 => "m2",
            SweepVar::W => "w",
        }
    }

    fn integral(&self) -> bool {
        matches!(self, SweepVar::N | SweepVar::V | SweepVar::Antennas | SweepVar::K0)
    }
}

impl FigureName {
    /// Sweep variable a named figure is tied to.
    pub fn pinned_var(&self) -> Option<SweepVar> {
        match self {
            FigureName::Fig2 => Some(SweepVar::Chi),
            FigureName::Fig3 => Some(SweepVar::PsiDb),
            FigureName::Fig4 => Some(SweepVar::N),
            FigureName::Fig5 => Some(SweepVar::EpsTh),
            FigureName::Fig6 => Some(SweepVar::Antennas),
            FigureName::Fig7 => Some(SweepVar::K0),
            FigureName::Fig8 => Some(SweepVar::W),
            FigureName::Custom => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FigureName::Fig2 => "fig2",
            FigureName::Fig3 => "fig3",
            FigureName::Fig4 => "fig4",
            FigureName::Fig5 => "fig5",
            FigureName::Fig6 => "fig6",
            FigureName::Fig7 => "fig7",
            FigureName::Fig8 => "fig8",
            FigureName::Custom => "custom",
        }
    }
}

/// Parameter overrides; unset fields take the figure's defaults.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub antennas: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi_db: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k0: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_th: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inverse: Option<String>,
}

/// Either explicit values or an evenly spaced (optionally logarithmic) grid.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub var: Option<SweepVar>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub from: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub to: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub log: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// Experiment file as written by the user.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    #[serde(default)]
    pub name: FigureName,
    /// Entries like "ksc:fbl"; a bare scheme name selects both forms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schemes: Option<Vec<String>>,
    #[serde(default)]
    pub params: ParamOverrides,
    #[serde(default)]
    pub sweep: SweepSpec,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub montecarlo: Option<MonteCarloSpec>,
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| bad(format!("config: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment spec always serializes")
    }

    pub fn from_path(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| bad(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Fully defaulted, linear-scale parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseParams {
    pub m1: f64,
    pub m2: f64,
    pub antennas: u32,
    pub n: u32,
    pub v: u32,
    pub psi: f64,
    pub k0: u32,
    pub eps_th: f64,
    pub inverse: InverseMethod,
}

/// Baseline parameters shared by the figure presets.
pub const BASELINE: BaseParams = BaseParams {
    m1: 5.0,
    m2: 2.0,
    antennas: 1,
    n: 200,
    v: 1000,
    psi: 1.0,
    k0: 16,
    eps_th: 1e-2,
    inverse: InverseMethod::ClosedForm,
};

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub name: FigureName,
    pub base: BaseParams,
    pub var: SweepVar,
    pub grid: Vec<f64>,
    pub schemes: Vec<(Scheme, Form)>,
    pub mc: Option<(u64, u64)>,
}

struct FigureDefaults {
    antennas: u32,
    eps_th: f64,
    grid: fn() -> Vec<f64>,
    schemes: &'static [(Scheme, Form)],
}

const ALL_SIX: &[(Scheme, Form)] = &[
    (Scheme::Ftr, Form::Asymptotic),
    (Scheme::Ftr, Form::Fbl),
    (Scheme::Ksc, Form::Asymptotic),
    (Scheme::Ksc, Form::Fbl),
    (Scheme::Fcsi, Form::Asymptotic),
    (Scheme::Fcsi, Form::Fbl),
];

/// Dense n sweeps keep to the forms that are cheap per point.
const LIGHT: &[(Scheme, Form)] = &[
    (Scheme::Ftr, Form::Asymptotic),
    (Scheme::Ftr, Form::Fbl),
    (Scheme::Ksc, Form::Asymptotic),
    (Scheme::Fcsi, Form::Asymptotic),
];

pub fn linear_grid(from: f64, to: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![from];
    }
    (0..points)
        .map(|i| from + (to - from) * i as f64 / (points - 1) as f64)
        .collect()
}

pub fn log_grid(from: f64, to: f64, points: usize) -> Vec<f64> {
    let (a, b) = (from.log10(), to.log10());
    linear_grid(a, b, points).into_iter().map(|e| 10f64.powf(e)).collect()
}

fn defaults(name: FigureName) -> FigureDefaults {
    match name {
        FigureName::Fig2 => FigureDefaults {
            antennas: 1,
            eps_th: 1e-2,
            grid: || log_grid(1e-2, 1e2, 81),
            schemes: &[],
        },
        FigureName::Fig3 => FigureDefaults {
            antennas: 1,
            eps_th: 1e-2,
            grid: || linear_grid(-5.0, 15.0, 41),
            schemes: ALL_SIX,
        },
        FigureName::Fig4 => FigureDefaults {
            antennas: 4,
            eps_th: 1e-4,
            grid: || linear_grid(1.0, 1199.0, 1199),
            schemes: LIGHT,
        },
        FigureName::Fig5 => FigureDefaults {
            antennas: 4,
            eps_th: 1e-2,
            grid: || log_grid(1e-6, 1e-1, 126),
            schemes: ALL_SIX,
        },
        FigureName::Fig6 => FigureDefaults {
            antennas: 1,
            eps_th: 1e-4,
            grid: || linear_grid(1.0, 8.0, 8),
            schemes: ALL_SIX,
        },
        FigureName::Fig7 => FigureDefaults {
            antennas: 4,
            eps_th: 1e-3,
            grid: || linear_grid(8.0, 128.0, 16),
            schemes: ALL_SIX,
        },
        FigureName::Fig8 => FigureDefaults {
            antennas: 1,
            eps_th: 1e-2,
            grid: || log_grid(1e-4, 1e1, 101),
            schemes: &[],
        },
        FigureName::Custom => FigureDefaults {
            antennas: 1,
            eps_th: 1e-2,
            grid: Vec::new,
            schemes: ALL_SIX,
        },
    }
}

fn parse_schemes(entries: &[String]) -> Result<Vec<(Scheme, Form)>, ConfigError> {
    let mut out = Vec::new();
    for e in entries {
        let (s, f) = match e.split_once(':') {
            Some((s, f)) => (s, Some(f)),
            None => (e.as_str(), None),
        };
        let scheme: Scheme = s.trim().parse().map_err(|m| bad(format!("schemes: {m}")))?;
        let forms = match f {
            Some(f) => vec![f.trim().parse::<Form>().map_err(|m| bad(format!("schemes: {m}")))?],
            None => vec![Form::Asymptotic, Form::Fbl],
        };
        for form in forms {
            if !out.contains(&(scheme, form)) {
                out.push((scheme, form));
            }
        }
    }
    if out.is_empty() {
        return Err(bad("schemes: list is empty"));
    }
    Ok(out)
}

impl ExperimentSpec {
    /// Applies figure defaults and checks every field.
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let d = defaults(self.name);
        let p = &self.params;
        let inverse = match &p.inverse {
            Some(s) => s
                .parse::<InverseMethod>()
                .map_err(|m| bad(format!("params.inverse: {m}")))?,
            None => BASELINE.inverse,
        };
        let base = BaseParams {
            m1: p.m1.unwrap_or(BASELINE.m1),
            m2: p.m2.unwrap_or(BASELINE.m2),
            antennas: p.antennas.unwrap_or(d.antennas),
            n: p.n.unwrap_or(BASELINE.n),
            v: p.v.unwrap_or(BASELINE.v),
            psi: db_to_linear(p.psi_db.unwrap_or(0.0)),
            k0: p.k0.unwrap_or(BASELINE.k0),
            eps_th: p.eps_th.unwrap_or(d.eps_th),
            inverse,
        };
        check_base(&base)?;

        let var = match (self.name.pinned_var(), self.sweep.var) {
            (Some(pinned), Some(given)) if pinned != given => {
                return Err(bad(format!(
                    "sweep.var: {} sweeps {}, not {}",
                    self.name.name(),
                    pinned.name(),
                    given.name()
                )))
            }
            (Some(pinned), _) => pinned,
            (None, Some(given)) => given,
            (None, None) => return Err(bad("sweep.var: required for custom experiments")),
        };
        let grid = self.grid(&d)?;
        check_grid(var, &grid, &base)?;

        let schemes = match &self.schemes {
            Some(list) => parse_schemes(list)?,
            None => d.schemes.to_vec(),
        };
        let mc = match &self.montecarlo {
            None => None,
            Some(m) => {
                let trials = m.trials.unwrap_or(1_000_000);
                if trials == 0 {
                    return Err(bad("montecarlo.trials: must be positive"));
                }
                Some((trials, m.seed.unwrap_or(1)))
            }
        };
        Ok(Resolved {
            name: self.name,
            base,
            var,
            grid,
            schemes,
            mc,
        })
    }

    fn grid(&self, d: &FigureDefaults) -> Result<Vec<f64>, ConfigError> {
        let s = &self.sweep;
        if let Some(values) = &s.values {
            if s.from.is_some() || s.to.is_some() || s.points.is_some() {
                return Err(bad("sweep.values: give either values or from/to/points, not both"));
            }
            return Ok(values.clone());
        }
        match (s.from, s.to, s.points) {
            (None, None, None) => Ok((d.grid)()),
            (Some(from), Some(to), Some(points)) => {
                if points == 0 {
                    return Err(bad("sweep.points: must be positive"));
                }
                if s.log.unwrap_or(false) {
                    if !(from > 0.0 && to > 0.0) {
                        return Err(bad("sweep.from: log grids need positive limits"));
                    }
                    Ok(log_grid(from, to, points))
                } else {
                    Ok(linear_grid(from, to, points))
                }
            }
            _ => Err(bad("sweep.points: from, to and points must be given together")),
        }
    }
}

fn check_base(b: &BaseParams) -> Result<(), ConfigError> {
    let pos = |x: f64, f: &str| {
        if x > 0.0 && x.is_finite() {
            Ok(())
        } else {
            Err(bad(format!("params.{f}: {x} is not a positive number")))
        }
    };
    pos(b.m1, "m1")?;
    pos(b.m2, "m2")?;
    pos(b.psi, "psi_db")?;
    if b.antennas == 0 {
        return Err(bad("params.antennas: must be at least 1"));
    }
    if b.n == 0 {
        return Err(bad("params.n: must be at least 1"));
    }
    if b.v == 0 {
        return Err(bad("params.v: must be at least 1"));
    }
    if b.k0 == 0 {
        return Err(bad("params.k0: must be at least 1"));
    }
    if !(b.eps_th > 0.0 && b.eps_th <= 0.1) {
        return Err(bad(format!("params.eps_th: {} is not in (0, 0.1]", b.eps_th)));
    }
    Ok(())
}

fn check_grid(var: SweepVar, grid: &[f64], base: &BaseParams) -> Result<(), ConfigError> {
    if grid.is_empty() {
        return Err(bad("sweep.values: grid is empty"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(bad("sweep.values: grid must be strictly increasing"));
    }
    for &x in grid {
        if !x.is_finite() {
            return Err(bad(format!("sweep.values: {x} is not finite")));
        }
        if var.integral() && (x.fract() != 0.0 || x < 1.0) {
            return Err(bad(format!(
                "sweep.values: {} takes positive integers, got {x}",
                var.name()
            )));
        }
        let ok = match var {
            SweepVar::Chi | SweepVar::M1 | SweepVar::M2 | SweepVar::W => x > 0.0,
            SweepVar::EpsTh => x > 0.0 && x <= 0.1,
            SweepVar::N => x < (base.n + base.v) as f64,
            _ => true,
        };
        if !ok {
            return Err(bad(format!("sweep.values: {x} is out of range for {}", var.name())));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_baseline() {
        let spec = ExperimentSpec::parse("name = \"fig6\"").unwrap();
        let r = spec.resolve().unwrap();
        assert_eq!(r.base.m1, 5.0);
        assert_eq!(r.base.m2, 2.0);
        assert_eq!((r.base.n, r.base.v, r.base.k0), (200, 1000, 16));
        assert_eq!(r.base.psi, 1.0);
        assert_eq!(r.var, SweepVar::Antennas);
        assert_eq!(ExperimentSpec::parse("").unwrap(), ExperimentSpec::default());
    }

    #[test]
    fn db_conversion_at_parse() {
        let spec = ExperimentSpec::parse("name = \"fig6\"\n[params]\npsi_db = 10.0\n").unwrap();
        assert!((spec.resolve().unwrap().base.psi - 10.0).abs() < 1e-12);
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((linear_to_db(db_to_linear(-3.7)) + 3.7).abs() < 1e-12);
    }

    #[test]
    fn unknown_field_named() {
        let err = ExperimentSpec::parse("[params]\nm3 = 1.0\n").unwrap_err();
        assert!(err.0.contains("m3"), "{err}");
        let err = ExperimentSpec::parse("bogus = 1\n").unwrap_err();
        assert!(err.0.contains("bogus"), "{err}");
    }

    #[test]
    fn round_trip() {
        let text = "name = \"fig5\"\nschemes = [\"ftr:fbl\", \"ksc\"]\n[params]\nantennas = 4\npsi_db = 3.0\n[sweep]\nfrom = 1e-4\nto = 1e-2\npoints = 9\nlog = true\n[montecarlo]\ntrials = 1000\nseed = 9\n";
        let spec = ExperimentSpec::parse(text).unwrap();
        assert_eq!(ExperimentSpec::parse(&spec.to_toml()).unwrap(), spec);
        let defaults = ExperimentSpec::default();
        assert_eq!(ExperimentSpec::parse(&defaults.to_toml()).unwrap(), defaults);
        let r = spec.resolve().unwrap();
        assert_eq!(r.schemes.len(), 3);
        assert_eq!(r.grid.len(), 9);
        assert_eq!(r.mc, Some((1000, 9)));
    }

    #[test]
    fn rejects_bad_grids_and_pins() {
        let cases = [
            "name = \"fig3\"\n[sweep]\nvar = \"n\"\n",
            "[sweep]\nvalues = [1.0]\n",
            "[sweep]\nvar = \"k0\"\nvalues = [16.0, 8.0]\n",
            "[sweep]\nvar = \"k0\"\nvalues = [16.5]\n",
            "[sweep]\nvar = \"eps_th\"\nvalues = []\n",
            "[sweep]\nvar = \"eps_th\"\nvalues = [0.5]\n",
            "[sweep]\nvar = \"chi\"\nfrom = 1.0\nto = 2.0\n",
            "[params]\neps_th = 0.0\n[sweep]\nvar = \"chi\"\nvalues = [1.0]\n",
            "schemes = [\"mrt\"]\n[sweep]\nvar = \"chi\"\nvalues = [1.0]\n",
        ];
        for c in cases {
            let r = ExperimentSpec::parse(c).and_then(|s| s.resolve());
            assert!(r.is_err(), "accepted: {c}");
        }
    }

    #[test]
    fn named_figures_contain_anchor_points() {
        let r = ExperimentSpec::parse("name = \"fig2\"").unwrap().resolve().unwrap();
        assert!(r.grid.contains(&1.0));
        let r = ExperimentSpec::parse("name = \"fig4\"").unwrap().resolve().unwrap();
        assert!(r.grid.contains(&272.0));
        assert_eq!(r.base.antennas, 4);
    }
}
