//! Line-oriented `key = value` experiment configuration.
//!
//! Global keys come first; a `[mixture]` section carries the grouping
//! parameters used by the mixture schemes. Parsing is strict: an unknown
//! key is an error naming that key, and serialize -> parse round-trips to
//! an identical spec.
//!
//! ```text
//! n = 4
//! k = 4
//! schemes = mixture, zf
//! rth = 1.5
//! cmargin = 2.0
//! seed = 20260810
//! trials = 100000
//! snr_db = 10:2:30
//! csi = perfect            # perfect | fixed:<sigma_e2> | power-scaled
//! measures = outage        # outage | sumrate | hist
//! label = fig3b-4
//!
//! [mixture]
//! grouping = algorithm1    # algorithm1 | sus
//! theta_th = 0.9
//! theta_tau1 = 0.25
//! theta_tau2 = 0.55
//! ```

use mixsim::channel::CsiModel;
use mixsim::grouping::GroupingConfig;
use mixsim::montecarlo::{ExperimentConfig, Scheme};

use crate::CliError;

/// Which outputs a run emits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Measures {
    pub outage: bool,
    pub sum_rate: bool,
    /// Histogram SNR points (must lie on the grid).
    pub hist_snr_db: Vec<f64>,
}

/// One experiment plus its requested outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub experiment: ExperimentConfig,
    pub measures: Measures,
}

/// A named run: one or more labelled experiments executed together.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub name: String,
    pub subruns: Vec<(String, RunSpec)>,
}

/// Flag overrides applied uniformly to every subrun of a plan.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<u64>,
    pub snr_grid_db: Option<Vec<f64>>,
    pub schemes: Option<Vec<String>>,
    pub theta_th: Option<f64>,
    pub r_th: Option<f64>,
    pub c_margin: Option<f64>,
    pub workers: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, spec: &mut RunSpec) -> Result<(), CliError> {
        let exp = &mut spec.experiment;
        if let Some(s) = self.seed {
            exp.master_seed = s;
        }
        if let Some(t) = self.trials {
            exp.trials = t;
        }
        if let Some(grid) = &self.snr_grid_db {
            exp.snr_grid_db = grid.clone();
        }
        if let Some(r) = self.r_th {
            exp.r_th = r;
        }
        if let Some(c) = self.c_margin {
            exp.c_margin = c;
        }
        if let Some(w) = self.workers {
            exp.workers = Some(w);
        }
        if let Some(th) = self.theta_th {
            for s in &mut exp.schemes {
                if let Scheme::Mixture(GroupingConfig::Algorithm1 { theta_th }) = s {
                    *theta_th = th;
                }
            }
        }
        if let Some(names) = &self.schemes {
            let grouping = current_grouping(&exp.schemes);
            exp.schemes = names
                .iter()
                .map(|n| scheme_from_name(n, &grouping))
                .collect::<Result<_, _>>()?;
        }
        Ok(())
    }
}

fn current_grouping(schemes: &[Scheme]) -> GroupingSettings {
    let mut g = GroupingSettings::default();
    for s in schemes {
        match s {
            Scheme::Mixture(GroupingConfig::Algorithm1 { theta_th }) => g.theta_th = *theta_th,
            Scheme::Mixture(GroupingConfig::Sus { theta_tau1, theta_tau2 }) => {
                g.theta_tau1 = *theta_tau1;
                g.theta_tau2 = *theta_tau2;
            }
            _ => {}
        }
    }
    g
}

#[derive(Debug, Clone, Copy)]
struct GroupingSettings {
    theta_th: f64,
    theta_tau1: f64,
    theta_tau2: f64,
}

impl Default for GroupingSettings {
    fn default() -> Self {
        GroupingSettings { theta_th: 0.9, theta_tau1: 0.25, theta_tau2: 0.55 }
    }
}

fn scheme_from_name(name: &str, g: &GroupingSettings) -> Result<Scheme, CliError> {
    match name {
        "mixture" => Ok(Scheme::Mixture(GroupingConfig::Algorithm1 { theta_th: g.theta_th })),
        "mixture-sus" => Ok(Scheme::Mixture(GroupingConfig::Sus {
            theta_tau1: g.theta_tau1,
            theta_tau2: g.theta_tau2,
        })),
        "zf" => Ok(Scheme::Zf),
        "mrt" => Ok(Scheme::Mrt),
        "single_group" => Ok(Scheme::SingleGroup),
        other => Err(CliError::Config(format!("unknown scheme '{}'", other))),
    }
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

/// Parse a config file body into a run spec. `default_label` names the
/// stream label when the file does not set `label`.
pub fn parse_config(text: &str, default_label: &str) -> Result<RunSpec, CliError> {
    let mut section = String::new();
    // Accumulate raw values first so scheme construction can see the
    // grouping settings regardless of key order.
    let mut n: Option<usize> = None;
    let mut k: Option<usize> = None;
    let mut scheme_names: Vec<String> = vec!["mixture".into()];
    let mut r_th = 1.5f64;
    let mut c_margin = 2.0f64;
    let mut seed = 0u64;
    let mut trials = 100_000u64;
    let mut snr: Option<Vec<f64>> = None;
    let mut csi = CsiModel::Perfect;
    let mut measures = Measures { outage: true, ..Default::default() };
    let mut measures_set = false;
    let mut hist_pts: Vec<f64> = Vec::new();
    let mut label = default_label.to_string();
    let mut workers: Option<usize> = None;
    let mut grouping = GroupingSettings::default();
    let mut grouping_kind = "algorithm1".to_string();

    for (lineno, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim().to_string();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('[') {
            if !line.ends_with(']') {
                return Err(CliError::Config(format!(
                    "line {}: malformed section header '{}'",
                    lineno + 1,
                    line
                )));
            }
            section = line[1..line.len() - 1].trim().to_string();
            match section.as_str() {
                "mixture" | "mixture-sus" | "zf" | "mrt" | "single_group" => {}
                other => {
                    return Err(CliError::Config(format!(
                        "line {}: unknown section '{}'",
                        lineno + 1,
                        other
                    )))
                }
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Config(format!(
                "line {}: expected 'key = value', got '{}'",
                lineno + 1,
                line
            )));
        };
        let key = key.trim();
        let value = value.trim();
        let fail = |msg: String| CliError::Config(format!("line {}: {}", lineno + 1, msg));

        if section.is_empty() {
            match key {
                "n" => n = Some(parse_num(key, value)? as usize),
                "k" => k = Some(parse_num(key, value)? as usize),
                "schemes" | "scheme" => {
                    scheme_names =
                        value.split(',').map(|s| s.trim().to_string()).collect::<Vec<_>>();
                    if scheme_names.iter().any(|s| s.is_empty()) {
                        return Err(fail(format!("key '{}': empty scheme name", key)));
                    }
                }
                "rth" => r_th = parse_float(key, value)?,
                "cmargin" => c_margin = parse_float(key, value)?,
                "seed" => seed = parse_num(key, value)?,
                "trials" => trials = parse_num(key, value)?,
                "snr_db" => snr = Some(parse_grid(value).map_err(fail)?),
                "csi" => csi = parse_csi(value).map_err(fail)?,
                "measures" => {
                    measures_set = true;
                    measures = Measures::default();
                    for m in value.split(',') {
                        match m.trim() {
                            "outage" => measures.outage = true,
                            "sumrate" => measures.sum_rate = true,
                            "hist" => {} // points come from hist_snr_db
                            other => {
                                return Err(fail(format!("unknown measure '{}'", other)))
                            }
                        }
                    }
                }
                "hist_snr_db" => hist_pts = parse_grid(value).map_err(fail)?,
                "label" => label = value.to_string(),
                "workers" => workers = Some(parse_num(key, value)? as usize),
                other => {
                    return Err(fail(format!("unknown key '{}'", other)));
                }
            }
        } else if section == "mixture" || section == "mixture-sus" {
            match key {
                "grouping" => match value {
                    "algorithm1" | "sus" => grouping_kind = value.to_string(),
                    other => return Err(fail(format!("unknown grouping '{}'", other))),
                },
                "theta_th" => grouping.theta_th = parse_float(key, value)?,
                "theta_tau1" => grouping.theta_tau1 = parse_float(key, value)?,
                "theta_tau2" => grouping.theta_tau2 = parse_float(key, value)?,
                other => {
                    return Err(fail(format!("unknown key '{}' in [{}]", other, section)))
                }
            }
        } else {
            return Err(fail(format!("section [{}] takes no keys", section)));
        }
    }

    let n = n.ok_or_else(|| CliError::Config("missing key 'n'".into()))?;
    let k = k.ok_or_else(|| CliError::Config("missing key 'k'".into()))?;
    let snr_grid_db =
        snr.ok_or_else(|| CliError::Config("missing key 'snr_db'".into()))?;

    let schemes: Vec<Scheme> = scheme_names
        .iter()
        .map(|name| match name.as_str() {
            // An explicit `grouping = sus` redirects the plain mixture
            // scheme to the scalable variant.
            "mixture" if grouping_kind == "sus" => scheme_from_name("mixture-sus", &grouping),
            other => scheme_from_name(other, &grouping),
        })
        .collect::<Result<_, _>>()?;

    measures.hist_snr_db = hist_pts;
    if !measures_set && !measures.hist_snr_db.is_empty() {
        measures.outage = false;
    }
    if !measures.hist_snr_db.is_empty() {
        for h in &measures.hist_snr_db {
            if !snr_grid_db.iter().any(|s| (s - h).abs() < 1e-9) {
                return Err(CliError::Config(format!(
                    "hist_snr_db point {} is not on the snr_db grid",
                    h
                )));
            }
        }
    }

    let experiment = ExperimentConfig {
        n,
        k,
        schemes,
        r_th,
        c_margin,
        snr_grid_db,
        trials,
        master_seed: seed,
        stream_label: label,
        csi,
        workers,
    };
    experiment
        .validate()
        .map_err(|e| CliError::Config(e.to_string()))?;
    Ok(RunSpec { experiment, measures })
}

/// Canonical serialization; `parse_config(serialize_config(spec))` yields
/// an identical spec.
pub fn serialize_config(spec: &RunSpec) -> String {
    let exp = &spec.experiment;
    let mut out = String::new();
    let mut push = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    push("n", exp.n.to_string());
    push("k", exp.k.to_string());
    let names: Vec<&str> = exp.schemes.iter().map(|s| s.name()).collect();
    push("schemes", names.join(", "));
    push("rth", format_float(exp.r_th));
    push("cmargin", format_float(exp.c_margin));
    push("seed", exp.master_seed.to_string());
    push("trials", exp.trials.to_string());
    let grid: Vec<String> = exp.snr_grid_db.iter().map(|&s| format_float(s)).collect();
    push("snr_db", grid.join(", "));
    push(
        "csi",
        match exp.csi {
            CsiModel::Perfect => "perfect".to_string(),
            CsiModel::FixedError { sigma_e2 } => format!("fixed:{}", format_float(sigma_e2)),
            CsiModel::PowerScaled => "power-scaled".to_string(),
        },
    );
    let mut meas = Vec::new();
    if spec.measures.outage {
        meas.push("outage");
    }
    if spec.measures.sum_rate {
        meas.push("sumrate");
    }
    if !spec.measures.hist_snr_db.is_empty() {
        meas.push("hist");
    }
    push("measures", meas.join(", "));
    if !spec.measures.hist_snr_db.is_empty() {
        let pts: Vec<String> = spec
            .measures
            .hist_snr_db
            .iter()
            .map(|&s| format_float(s))
            .collect();
        push("hist_snr_db", pts.join(", "));
    }
    push("label", exp.stream_label.clone());
    if let Some(w) = exp.workers {
        push("workers", w.to_string());
    }

    let g = current_grouping(&exp.schemes);
    let uses_sus = exp
        .schemes
        .iter()
        .any(|s| matches!(s, Scheme::Mixture(GroupingConfig::Sus { .. })));
    let uses_alg1 = exp
        .schemes
        .iter()
        .any(|s| matches!(s, Scheme::Mixture(GroupingConfig::Algorithm1 { .. })));
    if uses_sus || uses_alg1 {
        out.push_str("\n[mixture]\n");
        if uses_alg1 {
            out.push_str(&format!("theta_th = {}\n", format_float(g.theta_th)));
        }
        if uses_sus {
            out.push_str(&format!("theta_tau1 = {}\n", format_float(g.theta_tau1)));
            out.push_str(&format!("theta_tau2 = {}\n", format_float(g.theta_tau2)));
        }
    }
    out
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn parse_num(key: &str, value: &str) -> Result<u64, CliError> {
    value
        .parse::<u64>()
        .map_err(|_| CliError::Config(format!("key '{}': expected an integer, got '{}'", key, value)))
}

fn parse_float(key: &str, value: &str) -> Result<f64, CliError> {
    value
        .parse::<f64>()
        .map_err(|_| CliError::Config(format!("key '{}': expected a number, got '{}'", key, value)))
}

/// `lo:step:hi` (inclusive) or a comma-separated list.
pub fn parse_grid(value: &str) -> Result<Vec<f64>, String> {
    if value.contains(':') {
        let parts: Vec<&str> = value.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid '{}' must be lo:step:hi", value));
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| format!("bad grid start '{}'", parts[0]))?;
        let step: f64 =
            parts[1].trim().parse().map_err(|_| format!("bad grid step '{}'", parts[1]))?;
        let hi: f64 = parts[2].trim().parse().map_err(|_| format!("bad grid end '{}'", parts[2]))?;
        if !(step > 0.0) || hi < lo {
            return Err(format!("grid '{}' must satisfy lo <= hi, step > 0", value));
        }
        let mut grid = Vec::new();
        let mut i = 0u32;
        loop {
            let x = lo + step * f64::from(i);
            if x > hi + 1e-9 {
                break;
            }
            grid.push(x);
            i += 1;
        }
        Ok(grid)
    } else {
        value
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad grid value '{}'", s.trim()))
            })
            .collect()
    }
}

fn parse_csi(value: &str) -> Result<CsiModel, String> {
    if value == "perfect" {
        return Ok(CsiModel::Perfect);
    }
    if value == "power-scaled" {
        return Ok(CsiModel::PowerScaled);
    }
    if let Some(rest) = value.strip_prefix("fixed:") {
        let s: f64 = rest
            .trim()
            .parse()
            .map_err(|_| format!("bad fixed CSI variance '{}'", rest))?;
        return Ok(CsiModel::FixedError { sigma_e2: s });
    }
    Err(format!(
        "csi must be 'perfect', 'fixed:<sigma_e2>', or 'power-scaled', got '{}'",
        value
    ))
}

/// Shortest decimal form that round-trips through `f64` parsing.
pub fn format_float(x: f64) -> String {
    let s = format!("{}", x);
    debug_assert_eq!(s.parse::<f64>().ok(), Some(x));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# sample experiment
n = 4
k = 4
schemes = mixture, zf
rth = 1.5
cmargin = 2.0
seed = 99
trials = 5000
snr_db = 10:5:20
csi = fixed:0.1
measures = outage, sumrate

[mixture]
grouping = algorithm1
theta_th = 0.9
";

    #[test]
    fn parses_sample_config() {
        let spec = parse_config(SAMPLE, "sample").unwrap();
        let exp = &spec.experiment;
        assert_eq!((exp.n, exp.k), (4, 4));
        assert_eq!(exp.schemes.len(), 2);
        assert_eq!(exp.schemes[0].name(), "mixture");
        assert_eq!(exp.schemes[1].name(), "zf");
        assert_eq!(exp.snr_grid_db, vec![10.0, 15.0, 20.0]);
        assert_eq!(exp.csi, CsiModel::FixedError { sigma_e2: 0.1 });
        assert!(spec.measures.outage && spec.measures.sum_rate);
        assert_eq!(exp.stream_label, "sample");
    }

    #[test]
    fn round_trips_through_serialization() {
        let spec = parse_config(SAMPLE, "sample").unwrap();
        let text = serialize_config(&spec);
        let again = parse_config(&text, "ignored-default").unwrap();
        assert_eq!(spec, again);
    }

    #[test]
    fn unknown_key_is_named_in_error() {
        let err = parse_config("n = 2\nk = 2\nsnr_db = 10\nbogus = 1\n", "x").unwrap_err();
        assert!(err.to_string().contains("bogus"), "{}", err);
    }

    #[test]
    fn k_above_n_is_rejected() {
        let err = parse_config("n = 2\nk = 3\nsnr_db = 10\n", "x").unwrap_err();
        assert!(err.to_string().contains("K"), "{}", err);
    }

    #[test]
    fn malformed_grid_is_rejected() {
        assert!(parse_config("n = 2\nk = 2\nsnr_db = 10:0:20\n", "x").is_err());
        assert!(parse_config("n = 2\nk = 2\nsnr_db = 20:1:10\n", "x").is_err());
        assert!(parse_config("n = 2\nk = 2\nsnr_db = a,b\n", "x").is_err());
    }

    #[test]
    fn sus_grouping_key_switches_scheme() {
        let text = "\
n = 4
k = 4
schemes = mixture
snr_db = 10
[mixture]
grouping = sus
theta_tau1 = 0.25
theta_tau2 = 0.55
";
        let spec = parse_config(text, "x").unwrap();
        assert_eq!(spec.experiment.schemes[0].name(), "mixture-sus");
    }

    #[test]
    fn grid_expansion_is_inclusive() {
        assert_eq!(parse_grid("0:10:40").unwrap(), vec![0.0, 10.0, 20.0, 30.0, 40.0]);
        assert_eq!(parse_grid("5, 7.5").unwrap(), vec![5.0, 7.5]);
    }

    #[test]
    fn overrides_apply() {
        let mut spec = parse_config(SAMPLE, "sample").unwrap();
        let ov = Overrides {
            seed: Some(1),
            trials: Some(10),
            schemes: Some(vec!["zf".into()]),
            ..Default::default()
        };
        ov.apply(&mut spec).unwrap();
        assert_eq!(spec.experiment.master_seed, 1);
        assert_eq!(spec.experiment.trials, 10);
        assert_eq!(spec.experiment.schemes, vec![Scheme::Zf]);
    }
}
