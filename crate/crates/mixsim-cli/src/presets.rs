//! Named experiment presets.
//!
//! Each preset pins the system size, schemes, thresholds, SNR grid, and a
//! desk-scale default trial count; `--trials`, `--snr`, and `--seed` can
//! override them. Presets with several labelled subruns (different `K` or
//! CSI modes) share one stream label per pairing so paired curves see the
//! same channel draws.

use mixsim::channel::CsiModel;
use mixsim::grouping::GroupingConfig;
use mixsim::montecarlo::{ExperimentConfig, Scheme};

use crate::config::{Measures, RunPlan, RunSpec};
use crate::CliError;

pub const PRESET_NAMES: [&str; 9] = [
    "fig2a", "fig2b", "fig3a", "fig3b-4", "fig3b-8", "fig4", "fig5", "fig9", "fig10",
];

const DEFAULT_SEED: u64 = 20260810;

fn alg1() -> GroupingConfig {
    GroupingConfig::Algorithm1 { theta_th: 0.9 }
}

fn grid(lo: f64, step: f64, hi: f64) -> Vec<f64> {
    let mut g = Vec::new();
    let mut i = 0u32;
    loop {
        let x = lo + step * f64::from(i);
        if x > hi + 1e-9 {
            break;
        }
        g.push(x);
        i += 1;
    }
    g
}

fn base(
    n: usize,
    k: usize,
    schemes: Vec<Scheme>,
    snr_grid_db: Vec<f64>,
    trials: u64,
    label: &str,
) -> ExperimentConfig {
    ExperimentConfig {
        n,
        k,
        schemes,
        r_th: 1.5,
        c_margin: 2.0,
        snr_grid_db,
        trials,
        master_seed: DEFAULT_SEED,
        stream_label: label.to_string(),
        csi: CsiModel::Perfect,
        workers: None,
    }
}

fn outage(experiment: ExperimentConfig) -> RunSpec {
    RunSpec { experiment, measures: Measures { outage: true, ..Default::default() } }
}

/// Build the plan for a named preset.
pub fn preset(name: &str) -> Result<RunPlan, CliError> {
    let plan = match name {
        // Per-rank outage of the mixture scheme at N=3 for K=2 and K=3.
        "fig2a" => RunPlan {
            name: name.into(),
            subruns: vec![(
                "main".into(),
                outage(base(
                    3,
                    2,
                    vec![Scheme::Mixture(alg1())],
                    grid(4.0, 2.0, 20.0),
                    200_000,
                    "fig2a",
                )),
            )],
        },
        "fig2b" => RunPlan {
            name: name.into(),
            subruns: vec![(
                "main".into(),
                outage(base(
                    3,
                    3,
                    vec![Scheme::Mixture(alg1())],
                    grid(4.0, 2.0, 20.0),
                    200_000,
                    "fig2b",
                )),
            )],
        },
        // Overall outage, mixture vs ZF, N=4 with K=2 and K=3.
        "fig3a" => RunPlan {
            name: name.into(),
            subruns: vec![
                (
                    "k2".into(),
                    outage(base(
                        4,
                        2,
                        vec![Scheme::Mixture(alg1()), Scheme::Zf],
                        grid(4.0, 2.0, 24.0),
                        200_000,
                        "fig3a-k2",
                    )),
                ),
                (
                    "k3".into(),
                    outage(base(
                        4,
                        3,
                        vec![Scheme::Mixture(alg1()), Scheme::Zf],
                        grid(4.0, 2.0, 24.0),
                        200_000,
                        "fig3a-k3",
                    )),
                ),
            ],
        },
        // Overall outage, mixture vs ZF, square systems.
        "fig3b-4" => RunPlan {
            name: name.into(),
            subruns: vec![(
                "main".into(),
                outage(base(
                    4,
                    4,
                    vec![Scheme::Mixture(alg1()), Scheme::Zf],
                    grid(8.0, 2.0, 32.0),
                    200_000,
                    "fig3b-4",
                )),
            )],
        },
        "fig3b-8" => RunPlan {
            name: name.into(),
            subruns: vec![(
                "main".into(),
                outage(base(
                    8,
                    8,
                    vec![Scheme::Mixture(alg1()), Scheme::Zf],
                    grid(8.0, 2.0, 32.0),
                    50_000,
                    "fig3b-8",
                )),
            )],
        },
        // Pooled rate histograms at five SNR points.
        "fig4" => {
            let pts = vec![10.0, 15.0, 20.0, 40.0, 60.0];
            let mut spec = outage(base(
                4,
                4,
                vec![Scheme::Mixture(alg1()), Scheme::Zf],
                pts.clone(),
                100_000,
                "fig4",
            ));
            spec.measures = Measures { hist_snr_db: pts, ..Default::default() };
            RunPlan { name: name.into(), subruns: vec![("main".into(), spec)] }
        }
        // Average sum rate: mixture vs ZF vs one full superposition group.
        "fig5" => {
            let mut spec = outage(base(
                4,
                4,
                vec![Scheme::Mixture(alg1()), Scheme::Zf, Scheme::SingleGroup],
                grid(0.0, 5.0, 40.0),
                3_000,
                "fig5",
            ));
            spec.measures = Measures { sum_rate: true, ..Default::default() };
            RunPlan { name: name.into(), subruns: vec![("main".into(), spec)] }
        }
        // Imperfect CSI: fixed error floor vs power-scaled error, plus the
        // perfect baseline, all on the same channel streams.
        "fig9" => {
            let make = |csi: CsiModel| {
                let mut exp = base(
                    4,
                    4,
                    vec![Scheme::Mixture(alg1())],
                    grid(10.0, 10.0, 40.0),
                    200_000,
                    "fig9",
                );
                exp.csi = csi;
                outage(exp)
            };
            RunPlan {
                name: name.into(),
                subruns: vec![
                    ("perfect".into(), make(CsiModel::Perfect)),
                    ("fixed".into(), make(CsiModel::FixedError { sigma_e2: 0.1 })),
                    ("scaled".into(), make(CsiModel::PowerScaled)),
                ],
            }
        }
        // Scalable SUS grouping vs exhaustive grouping vs ZF.
        "fig10" => RunPlan {
            name: name.into(),
            subruns: vec![(
                "main".into(),
                outage(base(
                    4,
                    4,
                    vec![
                        Scheme::Mixture(GroupingConfig::Sus {
                            theta_tau1: 0.25,
                            theta_tau2: 0.55,
                        }),
                        Scheme::Mixture(alg1()),
                        Scheme::Zf,
                    ],
                    grid(8.0, 2.0, 32.0),
                    100_000,
                    "fig10",
                )),
            )],
        },
        other => {
            return Err(CliError::Config(format!(
                "unknown preset '{}'; available: {}",
                other,
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_presets_build_and_validate() {
        for name in PRESET_NAMES {
            let plan = preset(name).unwrap();
            assert!(!plan.subruns.is_empty(), "{} has no subruns", name);
            for (label, spec) in &plan.subruns {
                spec.experiment
                    .validate()
                    .unwrap_or_else(|e| panic!("{}/{}: {}", name, label, e));
            }
        }
        assert!(preset("fig99").is_err());
    }

    #[test]
    fn fig2a_matches_reference_setup() {
        let plan = preset("fig2a").unwrap();
        let exp = &plan.subruns[0].1.experiment;
        assert_eq!((exp.n, exp.k), (3, 2));
        assert_eq!(exp.schemes[0].name(), "mixture");
        assert!(matches!(
            exp.schemes[0],
            Scheme::Mixture(GroupingConfig::Algorithm1 { theta_th }) if theta_th == 0.9
        ));
        assert_eq!(exp.r_th, 1.5);
    }

    #[test]
    fn fig3b8_is_square_eight_paired() {
        let plan = preset("fig3b-8").unwrap();
        let exp = &plan.subruns[0].1.experiment;
        assert_eq!((exp.n, exp.k), (8, 8));
        let names: Vec<&str> = exp.schemes.iter().map(|s| s.name()).collect();
        assert_eq!(names, vec!["mixture", "zf"]);
    }

    #[test]
    fn fig9_subruns_share_stream_label() {
        let plan = preset("fig9").unwrap();
        let labels: Vec<&str> = plan
            .subruns
            .iter()
            .map(|(_, s)| s.experiment.stream_label.as_str())
            .collect();
        assert!(labels.iter().all(|&l| l == "fig9"));
    }
}
