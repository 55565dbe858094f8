mod common;

use common::*;
use ecf::baselines::cf_equal_power;
use ecf::experiment::*;
use ecf::geometry::ChannelRealization;
use ecf::power::PowerAllocation;
use ecf::schemes::*;
use ecf::successive::UeOrder;

fn small(schemes: &[&str], m: OneOrMany, trials: usize) -> Scenario {
    Scenario {
        m_aps: m,
        l_ues: 4,
        trials,
        seed: 7,
        schemes: schemes.iter().map(|s| s.to_string()).collect(),
        solver_starts: 4,
        solver_iterations: 20,
        solver_refine: 4,
        ..Default::default()
    }
}

fn csv_bytes(sc: &Scenario) -> Vec<u8> {
    let recs = run_scenario(sc).unwrap();
    let mut out = Vec::new();
    write_csv(&recs, sc.l_ues, &mut out).unwrap();
    out
}

#[test]
fn two_schemes_one_trial_two_identical_records() {
    let sc = small(&["CF", "MRC"], OneOrMany::One(8), 1);
    let recs = run_scenario(&sc).unwrap();
    assert_eq!(recs.len(), 2);
    assert_eq!(csv_bytes(&sc), csv_bytes(&sc));
    let text = String::from_utf8(csv_bytes(&sc)).unwrap();
    assert!(text.starts_with("scheme,m,l,trial,seed,sum_rate_bits,fronthaul_symbols,wall_ms,rate_ue_1,"));
    assert!(!text.contains('\r'));
}

#[test]
fn sweep_emits_one_record_per_scheme_trial_and_size() {
    let sc = Scenario {
        l_ues: 10,
        ..small(&["CF", "MRC"], OneOrMany::Many(vec![20, 40, 60, 80, 100]), 2)
    };
    let recs = run_scenario(&sc).unwrap();
    assert_eq!(recs.len(), 5 * 2 * 2);
    for r in &recs {
        assert!((r.sum_rate - r.per_ue_rates.iter().sum::<f64>()).abs() < 1e-9);
    }
}

#[test]
fn successive_first_step_within_parallel_worst_case() {
    let sc = small(&["PARA", "SUCC-HUNGARIAN"], OneOrMany::One(10), 1);
    for trial in 0..5 {
        let (seed, ch) = sc.realization(10, trial).unwrap();
        let opts = PipelineOptions {
            budget: ecf::power::SolverBudget {
                seed,
                ..Default::default()
            },
            ..Default::default()
        };
        let ctx = TrialContext::new(&ch, sc.pt_watts, &opts);
        let para = ctx.run(&"PARA".parse().unwrap()).unwrap();
        let succ = ctx.run(&"SUCC-HUNGARIAN".parse().unwrap()).unwrap();
        assert_eq!(para.power, succ.power);
        let worst = para.report.effective_noises.iter().cloned().fold(0.0, f64::max);
        assert!(succ.report.effective_noises[0] <= worst * (1.0 + 1e-12));
    }
}

#[test]
fn summary_of_single_record_and_self_ratios() {
    let sc = small(&["CF", "MRC"], OneOrMany::One(8), 1);
    let recs = run_scenario(&sc).unwrap();
    let s = summarize(&recs[..1]).unwrap();
    let g = s.group("CF", 8).unwrap();
    assert_eq!(g.mean, recs[0].sum_rate);
    assert_eq!(g.stderr, 0.0);
    assert_eq!(g.min, g.max);

    let sc = small(&["CF", "MRC", "PARA"], OneOrMany::One(8), 3);
    let s = summarize(&run_scenario(&sc).unwrap()).unwrap();
    for name in ["CF", "MRC", "PARA"] {
        let r = s.ratio(name, name, 8).unwrap();
        assert_eq!(r.ratio_of_means, 1.0);
        assert_eq!(r.mean_paired_ratio, 1.0);
    }
}

#[test]
fn cf_is_the_equal_power_parallel_path() {
    let sc = small(&["CF"], OneOrMany::One(12), 1);
    let opts = PipelineOptions::default();
    for trial in 0..4 {
        let (_, ch) = sc.realization(12, trial).unwrap();
        for aps in [false, true] {
            let direct = cf_equal_power(&ch, sc.pt_watts, aps, &opts).unwrap();
            let name = if aps { "APS-CF" } else { "CF" };
            let named = run_named(name, &ch, sc.pt_watts, &opts).unwrap();
            assert_eq!(direct, named.report);
            assert_eq!(named.power, PowerAllocation::equal(4, sc.pt_watts));
        }
    }
}

#[test]
fn single_user_pipelines_reach_capacity() {
    let mut rng = rng(40);
    let opts = PipelineOptions::default();
    for _ in 0..20 {
        let g: Vec<_> = (0..3).map(|_| channel(&mut rng, 1, 5.0)).collect();
        let beta = vec![vec![1.0]; 3];
        let ch = ChannelRealization::from_gains(g.clone(), beta);
        let pt = 0.7;
        let mrc_cap = (1.0 + pt * g.iter().map(|r| r[0].norm_sqr()).sum::<f64>()).log2();
        let out = run_named("MRC", &ch, pt, &opts).unwrap();
        assert!((out.report.sum_rate - mrc_cap).abs() <= 1e-9 * mrc_cap);
        for name in ["CF", "PARA", "SUCC-HUNGARIAN", "SUCC-RP"] {
            let out = run_named(name, &ch, pt, &opts).unwrap();
            let ap = out.selected[0];
            let cap = (1.0 + pt * g[ap][0].norm_sqr()).log2();
            assert!((out.report.sum_rate - cap).abs() <= 1e-9 * cap, "{name}");
        }
    }
}

#[test]
fn scheme_registry_and_config() {
    for name in [
        "CF",
        "MRC",
        "PARA",
        "APS-PARA",
        "LSF-PARA",
        "APS-LSF-PARA",
        "SUCC-RP",
        "SUCC-NORM",
        "SUCC-HUNGARIAN",
        "APS-LSF-SUCC-NORM",
    ] {
        let spec: SchemeSpec = name.parse().unwrap();
        assert_eq!(spec.to_string(), name);
    }
    assert!("SUCC-FOO".parse::<SchemeSpec>().is_err());
    let sc = small(&["CF", "BOGUS"], OneOrMany::One(8), 1);
    assert!(run_scenario(&sc).is_err());
    let sc =
        Scenario::from_json(r#"{"m_aps": 30, "l_ues": 5, "schemes": ["MRC"], "ue_order": "channel_norm"}"#).unwrap();
    assert_eq!(sc.m_aps.values(), vec![30]);
    assert_eq!(sc.ue_order, UeOrder::ChannelNorm);
    assert!(Scenario::from_json(r#"{"m_apps": 30}"#).is_err());
}

#[test]
fn tight_cap_flags_orphans_with_zero_rate() {
    // One AP per UE would serve only the strongest; UE 1 is never strongest.
    let g = vec![
        vec![c(40.0), c(1.0), c(0.5)],
        vec![c(0.3), c(2.0), c(30.0)],
        vec![c(35.0), c(3.0), c(0.2)],
        vec![c(0.1), c(0.4), c(25.0)],
    ];
    let beta: Vec<Vec<f64>> = g.iter().map(|r| r.iter().map(|x| x.norm_sqr()).collect()).collect();
    let ch = ChannelRealization::from_gains(g, beta);
    let opts = PipelineOptions {
        cap: Some(1),
        ..Default::default()
    };
    let out = run_named("CF", &ch, 1.0, &opts).unwrap();
    assert!(out.flags.orphaned);
    assert_eq!(out.report.per_ue_rates[1], 0.0);
}

fn c(x: f64) -> num_complex::Complex64 {
    num_complex::Complex64::new(x, 0.0)
}
