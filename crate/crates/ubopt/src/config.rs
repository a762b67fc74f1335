//! Scenario and sweep-spec files.
//!
//! Scenarios are flat TOML tables keyed by the usual symbols (`w_s`, `P_s`,
//! `sigma_d2`, ...). Positions are two-element arrays. Missing keys take the
//! reference values, unknown keys are rejected. `omega0_db` and
//! `sigma_d2_dbm` are accepted as alternatives to the linear keys and are
//! converted on load; only linear values are ever written back.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use ubopt_core::scenario::{db_to_linear, dbm_to_watts, default_scenario};
use ubopt_core::{EhModel, Point2, Scenario, ScenarioError, SchemeId};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("both {0} and {1} are set")]
    Conflict(&'static str, &'static str),
    #[error("unknown eh_model {0:?}")]
    EhModel(String),
    #[error("invalid scenario: {0}")]
    Invalid(#[from] ScenarioError),
    #[error("invalid sweep: {0}")]
    Sweep(String),
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w_s: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    w_d: Option<[f64; 2]>,
    #[serde(rename = "q_I", default, skip_serializing_if = "Option::is_none")]
    q_i: Option<[f64; 2]>,
    #[serde(rename = "q_F", default, skip_serializing_if = "Option::is_none")]
    q_f: Option<[f64; 2]>,
    #[serde(rename = "H", default, skip_serializing_if = "Option::is_none")]
    h: Option<f64>,
    #[serde(rename = "V_max", default, skip_serializing_if = "Option::is_none")]
    v_max: Option<f64>,
    #[serde(rename = "T", default, skip_serializing_if = "Option::is_none")]
    t: Option<f64>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(rename = "P_s", default, skip_serializing_if = "Option::is_none")]
    p_s: Option<f64>,
    #[serde(rename = "P_c", default, skip_serializing_if = "Option::is_none")]
    p_c: Option<f64>,
    #[serde(rename = "B", default, skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    omega0_db: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma_d2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sigma_d2_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<f64>,
    #[serde(rename = "Xi", default, skip_serializing_if = "Option::is_none")]
    xi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    nu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eta_max: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    eh_model: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    epsilon: Option<f64>,
}

fn pt(p: [f64; 2]) -> Point2 {
    Point2::new(p[0], p[1])
}

fn pair(from_linear: Option<f64>, from_db: Option<f64>, names: (&'static str, &'static str), conv: fn(f64) -> f64) -> Result<Option<f64>, ConfigError> {
    match (from_linear, from_db) {
        (Some(_), Some(_)) => Err(ConfigError::Conflict(names.0, names.1)),
        (Some(v), None) => Ok(Some(v)),
        (None, Some(db)) => Ok(Some(conv(db))),
        (None, None) => Ok(None),
    }
}

impl ScenarioFile {
    fn into_scenario(self) -> Result<Scenario, ConfigError> {
        let mut sc = default_scenario();
        let omega0 = pair(self.omega0, self.omega0_db, ("omega0", "omega0_db"), db_to_linear)?;
        let noise = pair(self.sigma_d2, self.sigma_d2_dbm, ("sigma_d2", "sigma_d2_dbm"), dbm_to_watts)?;
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src {
                    $dst = v;
                }
            };
        }
        set!(sc.source, self.w_s.map(pt));
        set!(sc.destination, self.w_d.map(pt));
        set!(sc.start, self.q_i.map(pt));
        set!(sc.end, self.q_f.map(pt));
        set!(sc.altitude, self.h);
        set!(sc.v_max, self.v_max);
        set!(sc.duration, self.t);
        set!(sc.slots, self.n);
        set!(sc.p_source, self.p_s);
        set!(sc.p_circuit, self.p_c);
        set!(sc.bandwidth, self.b);
        set!(sc.demand, self.s);
        set!(sc.caching, self.sigma);
        set!(sc.omega0, omega0);
        set!(sc.path_loss_exp, self.alpha);
        set!(sc.noise_power, noise);
        set!(sc.mu, self.mu);
        set!(sc.xi, self.xi);
        set!(sc.beta, self.beta);
        set!(sc.nu, self.nu);
        set!(sc.eta_max, self.eta_max);
        set!(sc.epsilon, self.epsilon);
        if let Some(m) = self.eh_model {
            sc.eh_model = EhModel::parse(&m).ok_or(ConfigError::EhModel(m))?;
        }
        Ok(sc)
    }

    fn from_scenario(sc: &Scenario) -> Self {
        let p = |q: Point2| Some([q.x, q.y]);
        Self {
            w_s: p(sc.source),
            w_d: p(sc.destination),
            q_i: p(sc.start),
            q_f: p(sc.end),
            h: Some(sc.altitude),
            v_max: Some(sc.v_max),
            t: Some(sc.duration),
            n: Some(sc.slots),
            p_s: Some(sc.p_source),
            p_c: Some(sc.p_circuit),
            b: Some(sc.bandwidth),
            s: Some(sc.demand),
            sigma: Some(sc.caching),
            omega0: Some(sc.omega0),
            omega0_db: None,
            alpha: Some(sc.path_loss_exp),
            sigma_d2: Some(sc.noise_power),
            sigma_d2_dbm: None,
            mu: Some(sc.mu),
            xi: Some(sc.xi),
            beta: Some(sc.beta),
            nu: Some(sc.nu),
            eta_max: Some(sc.eta_max),
            eh_model: Some(sc.eh_model.name().to_string()),
            epsilon: Some(sc.epsilon),
        }
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ConfigError> {
    let file: ScenarioFile = toml::from_str(text)?;
    Ok(file.into_scenario()?.validated()?)
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    parse_scenario(&read(path)?)
}

/// Writes every field in linear SI units. Floats use the shortest
/// representation that parses back to the same value.
pub fn scenario_to_string(sc: &Scenario) -> String {
    toml::to_string(&ScenarioFile::from_scenario(sc)).expect("scenario fields are plain scalars")
}

/// Parameter a sweep may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKey {
    T,
    N,
    Ps,
    Pc,
    S,
    Sigma,
    EtaMax,
    VMax,
    H,
    B,
    Mu,
    Xi,
    Alpha,
    Epsilon,
}

impl SweepKey {
    const ALL: [(SweepKey, &'static str); 14] = [
        (SweepKey::T, "T"),
        (SweepKey::N, "N"),
        (SweepKey::Ps, "P_s"),
        (SweepKey::Pc, "P_c"),
        (SweepKey::S, "S"),
        (SweepKey::Sigma, "sigma"),
        (SweepKey::EtaMax, "eta_max"),
        (SweepKey::VMax, "V_max"),
        (SweepKey::H, "H"),
        (SweepKey::B, "B"),
        (SweepKey::Mu, "mu"),
        (SweepKey::Xi, "Xi"),
        (SweepKey::Alpha, "alpha"),
        (SweepKey::Epsilon, "epsilon"),
    ];

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().find(|(_, n)| *n == s).map(|(k, _)| *k)
    }

    pub fn name(self) -> &'static str {
        Self::ALL.iter().find(|(k, _)| *k == self).map(|(_, n)| *n).unwrap_or("?")
    }

    /// Sets the swept field. With `keep_slot_length`, changing `T` also
    /// rescales `N` so that `T / N` stays at the base value.
    pub fn apply(self, base: &Scenario, value: f64, keep_slot_length: bool) -> Result<Scenario, ConfigError> {
        let mut sc = base.clone();
        match self {
            SweepKey::T => {
                sc.duration = value;
                if keep_slot_length {
                    let n = (value / base.slot_length()).round();
                    if !(n >= 1.0) {
                        return Err(ConfigError::Sweep(format!("T = {value} leaves no slots")));
                    }
                    sc.slots = n as usize;
                }
            }
            SweepKey::N => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(ConfigError::Sweep(format!("N = {value} is not a positive integer")));
                }
                sc.slots = value as usize;
            }
            SweepKey::Ps => sc.p_source = value,
            SweepKey::Pc => sc.p_circuit = value,
            SweepKey::S => sc.demand = value,
            SweepKey::Sigma => sc.caching = value,
            SweepKey::EtaMax => sc.eta_max = value,
            SweepKey::VMax => sc.v_max = value,
            SweepKey::H => sc.altitude = value,
            SweepKey::B => sc.bandwidth = value,
            SweepKey::Mu => sc.mu = value,
            SweepKey::Xi => sc.xi = value,
            SweepKey::Alpha => sc.path_loss_exp = value,
            SweepKey::Epsilon => sc.epsilon = value,
        }
        Ok(sc.validated()?)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepTable {
    key: String,
    values: Vec<f64>,
    #[serde(default)]
    keep_slot_length: bool,
}

/// A base scenario, one swept parameter and the schemes to run at each value.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: Scenario,
    pub key: SweepKey,
    pub values: Vec<f64>,
    pub schemes: Vec<SchemeId>,
    pub keep_slot_length: bool,
}

impl SweepSpec {
    /// Scenario at every swept value, validated up front.
    pub fn scenarios(&self) -> Result<Vec<Scenario>, ConfigError> {
        self.values.iter().map(|&v| self.key.apply(&self.base, v, self.keep_slot_length)).collect()
    }
}

pub fn parse_sweep(text: &str) -> Result<SweepSpec, ConfigError> {
    let mut table: toml::Table = text.parse()?;
    let sweep = table.remove("sweep").ok_or_else(|| ConfigError::Sweep("missing [sweep] table".into()))?;
    let sweep: SweepTable = sweep.try_into()?;
    let schemes = table.remove("schemes").ok_or_else(|| ConfigError::Sweep("missing schemes".into()))?;
    let names: Vec<String> = schemes.try_into()?;
    let schemes = names
        .iter()
        .map(|s| SchemeId::parse(s).ok_or_else(|| ConfigError::Sweep(format!("unknown scheme {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if schemes.is_empty() {
        return Err(ConfigError::Sweep("schemes is empty".into()));
    }
    let key = SweepKey::parse(&sweep.key).ok_or_else(|| ConfigError::Sweep(format!("unknown sweep key {:?}", sweep.key)))?;
    if sweep.values.is_empty() {
        return Err(ConfigError::Sweep("values is empty".into()));
    }
    let file: ScenarioFile = toml::Value::Table(table).try_into()?;
    let base = file.into_scenario()?.validated()?;
    let spec = SweepSpec { base, key, values: sweep.values, schemes, keep_slot_length: sweep.keep_slot_length };
    spec.scenarios()?;
    Ok(spec)
}

pub fn load_sweep(path: &Path) -> Result<SweepSpec, ConfigError> {
    parse_sweep(&read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_reference_scenario() {
        assert_eq!(parse_scenario("").unwrap(), default_scenario());
    }

    #[test]
    fn reference_values() {
        let sc = parse_scenario("").unwrap();
        assert_eq!(sc.source, Point2::new(5.0, 0.0));
        assert_eq!(sc.destination, Point2::new(15.0, 0.0));
        assert_eq!(sc.start, Point2::new(0.0, 10.0));
        assert_eq!(sc.end, Point2::new(20.0, 10.0));
        assert_eq!((sc.altitude, sc.v_max, sc.p_circuit, sc.eta_max), (10.0, 20.0, 1e-6, 0.5));
        assert_eq!((sc.slot_length(), sc.bandwidth, sc.xi), (0.5, 1e6, 2.8e-3));
        assert_eq!((sc.beta, sc.nu, sc.epsilon, sc.mu), (1500.0, 0.0022, 1e-4, 0.9));
        assert_eq!((sc.omega0, sc.path_loss_exp), (1e-3, 2.0));
    }

    #[test]
    fn round_trip_is_exact() {
        let mut sc = default_scenario();
        sc.omega0 = 0.1 + 0.2;
        sc.noise_power = dbm_to_watts(-87.3);
        sc.eh_model = EhModel::NonLinear;
        sc.start = Point2::new(-1.0 / 3.0, 1e-17);
        let back = parse_scenario(&scenario_to_string(&sc)).unwrap();
        assert_eq!(back, sc);
    }

    #[test]
    fn db_keys_convert() {
        let sc = parse_scenario("omega0_db = -30\nsigma_d2_dbm = -90\n").unwrap();
        assert!((sc.omega0 - 1e-3).abs() < 1e-18);
        assert!((sc.noise_power - 1e-12).abs() < 1e-27);
        assert!(!scenario_to_string(&sc).contains("_db"));
    }

    #[test]
    fn conflicting_keys_rejected() {
        let e = parse_scenario("omega0 = 1e-3\nomega0_db = -30\n").unwrap_err();
        assert!(matches!(e, ConfigError::Conflict("omega0", "omega0_db")));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(matches!(parse_scenario("P_source = 3\n"), Err(ConfigError::Parse(_))));
    }

    #[test]
    fn sigma_out_of_range_names_field() {
        let e = parse_scenario("sigma = 1.5\n").unwrap_err();
        assert!(e.to_string().contains("sigma out of range"), "{e}");
    }

    #[test]
    fn hover_mission_is_valid() {
        let sc = parse_scenario("q_I = [3, 4]\nq_F = [3, 4]\nV_max = 0\nT = 10\n").unwrap();
        assert_eq!(sc.v_max, 0.0);
    }

    #[test]
    fn integer_literals_accepted() {
        let sc = parse_scenario("T = 250\nP_s = 10\n").unwrap();
        assert_eq!((sc.duration, sc.p_source), (250.0, 10.0));
    }

    #[test]
    fn slot_length_times_n_is_t() {
        let sc = parse_scenario("T = 7.3\nN = 11\n").unwrap();
        let prod = sc.slot_length() * sc.slots as f64;
        assert!((prod - sc.duration).abs() <= f64::EPSILON * sc.duration);
    }

    #[test]
    fn sweep_spec_parses() {
        let s = parse_sweep("schemes = [\"nleh\", \"NLNC\"]\nP_s = 10\n[sweep]\nkey = \"T\"\nvalues = [50, 100]\nkeep_slot_length = true\n")
            .unwrap();
        assert_eq!(s.schemes, vec![SchemeId::Nleh, SchemeId::Nlnc]);
        assert_eq!(s.key, SweepKey::T);
        let scs = s.scenarios().unwrap();
        assert_eq!((scs[0].slots, scs[1].slots), (100, 200));
        assert_eq!(scs[1].p_source, 10.0);
    }

    #[test]
    fn sweep_without_slot_rescale_keeps_n() {
        let s = parse_sweep("schemes = [\"LEH\"]\nN = 20\n[sweep]\nkey = \"T\"\nvalues = [5, 9]\n").unwrap();
        assert!(s.scenarios().unwrap().iter().all(|sc| sc.slots == 20));
    }

    #[test]
    fn bad_sweeps_rejected() {
        let bad = [
            "schemes = [\"LEH\"]\n[sweep]\nkey = \"Q\"\nvalues = [1]\n",
            "schemes = [\"XYZ\"]\n[sweep]\nkey = \"T\"\nvalues = [1]\n",
            "schemes = [\"LEH\"]\n[sweep]\nkey = \"sigma\"\nvalues = [2]\n",
            "schemes = [\"LEH\"]\n[sweep]\nkey = \"N\"\nvalues = [2.5]\n",
            "schemes = [\"LEH\"]\n",
            "[sweep]\nkey = \"T\"\nvalues = [1]\n",
            "schemes = [\"LEH\"]\nbogus = 1\n[sweep]\nkey = \"T\"\nvalues = [1]\n",
        ];
        for b in bad {
            assert!(parse_sweep(b).is_err(), "{b}");
        }
    }
}
