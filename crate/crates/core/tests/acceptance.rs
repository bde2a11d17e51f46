//! End-to-end acceptance checks. Runs without the libtest harness so every
//! criterion prints one PASS/FAIL line; the process fails if any criterion does.

mod common;

use std::time::Instant;

use coalescent::ancestral::{
    ancestral_pmf, lineage_pmf, r_freq_pmf, r_pmf, ModelParams,
};
use coalescent::ewens::{parse_allele_data, theta_mle};
use coalescent::oracle::{conditional_laws_by_configuration, oracle_conditional_pmfs, oracle_pmf, parse_rational, Statistic};
use coalescent::pmf::Pmf;
use coalescent::posterior::{
    cond_r_freq_pmf, cond_r_pmf, gt_new_lineage_prob, gt_singleton_prob, predictive_lineage_pmf,
    predictive_lineage_pmf_closed, predictive_singleton_pmf, predictive_singleton_pmf_closed, PredictiveQuery,
};
use coalescent::simulator::run_block_replicates;
use coalescent::Error;
use common::{chi_square_gof, params};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn singh() -> coalescent::ewens::AlleleData {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../cli/examples/singh1976.json");
    parse_allele_data(&std::fs::read_to_string(path).expect("bundled data")).expect("valid data")
}

fn mle_reproduction() -> Outcome {
    let start = Instant::now();
    let data = singh();
    let fit = theta_mle(&data.configuration).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let (m, k) = (data.configuration.m(), data.configuration.k());
    check(
        (m, k) == (146, 27) && (9.4..=9.6).contains(&fit.theta) && secs < 1.0,
        format!("m={m} k={k} theta_hat={:.6} in {secs:.3}s", fit.theta),
    )
}

fn block_process_reproduction() -> Outcome {
    let start = Instant::now();
    let sim = run_block_replicates(&singh().partition, 9.5, 0.34, 10_000, 2024).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    let (dt, ds) = (sim.d_total.mean(), sim.d_singleton.mean());
    let (it, is) = (sim.d_total.narrowest_interval(0.95), sim.d_singleton.narrowest_interval(0.95));
    check(
        (2.21..=2.41).contains(&dt)
            && (1.48..=1.68).contains(&ds)
            && it == Some((0, 4))
            && is == Some((0, 3))
            && secs < 30.0,
        format!("mean d_total={dt:.4} mean d_singleton={ds:.4} intervals {it:?} {is:?} in {secs:.2}s"),
    )
}

fn overlay() -> Outcome {
    let exact = lineage_pmf(146, &params(9.5, 0.34)).map_err(|e| e.to_string())?;
    let sim = run_block_replicates(&singh().partition, 9.5, 0.34, 100_000, 77).map_err(|e| e.to_string())?;
    let p = chi_square_gof(&sim.d_total, &exact);
    check(p > 0.001, format!("chi-square p = {p:.4} at 1e5 replicates"))
}

fn oracle_exactness() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut compared = 0usize;
    for th in ["1/2", "1", "3"] {
        let q = parse_rational(th).unwrap();
        let theta = match th {
            "1/2" => 0.5,
            "1" => 1.0,
            _ => 3.0,
        };
        for n in 0..=10usize {
            for m in 0..=10 - n {
                let tv = |exact: &coalescent::oracle::ExactPmf, analytic: Pmf| exact.to_pmf().total_variation(&analytic);
                let e = oracle_pmf(Statistic::R { n, m }, &q).map_err(|e| e.to_string())?;
                worst = worst.max(tv(&e, r_pmf(n, m, theta).map_err(|e| e.to_string())?));
                compared += 1;
                for l in 1..=3 {
                    let e = oracle_pmf(Statistic::RFreq { l, n, m }, &q).map_err(|e| e.to_string())?;
                    worst = worst.max(tv(&e, r_freq_pmf(l, n, m, theta).map_err(|e| e.to_string())?));
                    compared += 1;
                }
                for mp in 1..=10 - n - m {
                    let fam = oracle_conditional_pmfs(Statistic::CondR { n, m, m_prime: mp, y: 0 }, &q).map_err(|e| e.to_string())?;
                    for (&y, e) in &fam {
                        let a = cond_r_pmf(n, m, mp, y, theta).map_err(|e| format!("cond_r n={n} m={m} m'={mp} y={y}: {e}"))?;
                        worst = worst.max(tv(e, a));
                        compared += 1;
                    }
                    for l in 1..=3 {
                        let fam = oracle_conditional_pmfs(Statistic::CondRFreq { l, n, m, m_prime: mp, y: 0 }, &q)
                            .map_err(|e| e.to_string())?;
                        for (&y, e) in &fam {
                            let a = cond_r_freq_pmf(l, n, m, mp, y, theta)
                                .map_err(|e| format!("cond_r_freq l={l} n={n} m={m} m'={mp} y={y}: {e}"))?;
                            worst = worst.max(tv(e, a));
                            compared += 1;
                        }
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst < 1e-12 && secs < 120.0,
        format!("{compared} pmfs, max TV {worst:.2e}, {secs:.1}s"),
    )
}

fn mixture_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for theta in [0.5, 1.0, 9.5] {
        for t in [0.1, 0.34, 1.0, 2.0] {
            let p = params(theta, t);
            let d = ancestral_pmf(&p).map_err(|e| e.to_string())?;
            for m in 1..=25 {
                let direct = lineage_pmf(m, &p).map_err(|e| format!("m={m} θ={theta} t={t}: {e}"))?;
                let mut mix = vec![0.0; m + 1];
                for (n, dn) in d.iter() {
                    let r = r_pmf(n, m, theta).map_err(|e| e.to_string())?;
                    for (x, px) in r.iter() {
                        mix[x] += dn * px;
                    }
                }
                for (x, &v) in mix.iter().enumerate() {
                    worst = worst.max((direct.get(x) - v).abs());
                }
            }
        }
    }
    check(worst < 1e-8, format!("max abs difference {worst:.2e} over m<=25, 3 θ x 4 t"))
}

fn sufficiency() -> Outcome {
    let mut groups = 0usize;
    let mut multi = 0usize;
    for th in ["1/2", "1", "3"] {
        let q = parse_rational(th).unwrap();
        for n in 1..=9usize {
            for m in 1..=9 - n {
                for mp in 1..=10 - n - m {
                    for l in [None, Some(1), Some(2), Some(3)] {
                        let by_y = conditional_laws_by_configuration(n, m, mp, l, &q).map_err(|e| e.to_string())?;
                        for laws in by_y.values() {
                            groups += 1;
                            if laws.len() > 1 {
                                multi += 1;
                            }
                            if let Some((c, _)) = laws.iter().find(|(_, p)| *p != laws[0].1) {
                                return Err(format!("n={n} m={m} m'={mp} l={l:?}: {c:?} differs from {:?}", laws[0].0));
                            }
                        }
                    }
                }
            }
        }
    }
    check(multi > 0, format!("{groups} groups ({multi} with several configurations) agree exactly"))
}

fn good_turing() -> Outcome {
    let (mut worst_new, mut worst_single): (f64, f64) = (0.0, 0.0);
    let mut points = 0;
    for m in [3, 5, 8, 12, 20] {
        for (theta, t) in [(0.5, 1.0), (1.0, 0.5), (9.5, 0.34), (2.0, 2.0), (1.0, 1.5)] {
            for y in [1, 2] {
                let p = params(theta, t);
                let q = PredictiveQuery::new(m, 1, y, p).map_err(|e| e.to_string())?;
                let ctx = |e: Error| format!("m={m} y={y} θ={theta} t={t}: {e}");
                let gt = gt_new_lineage_prob(m, y, &p).map_err(ctx)?;
                let pred = predictive_lineage_pmf(&q).map_err(ctx)?;
                worst_new = worst_new.max((gt - pred.get(y + 1)).abs());
                let gs = gt_singleton_prob(m, y, &p).map_err(ctx)?;
                let ps = predictive_singleton_pmf(&q).map_err(ctx)?;
                worst_single = worst_single.max((gs - ps.mean()).abs());
                points += 1;
            }
        }
    }
    check(
        points == 50 && worst_new < 1e-10 && worst_single < 1e-8,
        format!("{points} points, new-lineage diff {worst_new:.2e}, singleton diff {worst_single:.2e}"),
    )
}

fn total_probability() -> Outcome {
    let (m, mp) = (4, 3);
    let mut worst: f64 = 0.0;
    let mut skipped_mass: f64 = 0.0;
    for theta in [0.5, 1.0, 9.5] {
        for t in [0.1, 0.34, 1.0, 2.0] {
            let p = params(theta, t);
            let prior = lineage_pmf(m, &p).map_err(|e| e.to_string())?;
            let target = lineage_pmf(m + mp, &p).map_err(|e| e.to_string())?;
            let mut mix = vec![0.0; m + mp + 1];
            for (y, py) in prior.iter() {
                match predictive_lineage_pmf(&PredictiveQuery::new(m, mp, y, p).unwrap()) {
                    Ok(pred) => {
                        for (x, px) in pred.iter() {
                            mix[x] += py * px;
                        }
                    }
                    // refused only when P[D_m = y] is itself negligible
                    Err(Error::NegligibleConditioningMass { .. }) => skipped_mass += py,
                    Err(e) => return Err(format!("θ={theta} t={t} y={y}: {e}")),
                }
            }
            for (x, &v) in mix.iter().enumerate() {
                worst = worst.max((target.get(x) - v).abs());
            }
        }
    }
    check(
        worst < 1e-8,
        format!("max abs difference {worst:.2e} (prior mass of refused y: {skipped_mass:.1e})"),
    )
}

fn dual_paths() -> Outcome {
    let (mut worst_l, mut worst_s): (f64, f64) = (0.0, 0.0);
    let (mut compared, mut refused) = (0usize, 0usize);
    for theta in [0.5, 1.0, 9.5] {
        for t in [0.34, 1.0] {
            let p: ModelParams = params(theta, t);
            for m in 1..=8 {
                for mp in 0..=8 {
                    for y in 0..=m {
                        let q = PredictiveQuery::new(m, mp, y, p).unwrap();
                        let ctx = |e: Error| format!("m={m} m'={mp} y={y} θ={theta} t={t}: {e}");
                        match predictive_lineage_pmf(&q) {
                            Ok(mix) => {
                                let closed = predictive_lineage_pmf_closed(&q).map_err(ctx)?;
                                worst_l = worst_l.max(mix.total_variation(&closed));
                                compared += 1;
                            }
                            Err(Error::NegligibleConditioningMass { .. }) => refused += 1,
                            Err(e) => return Err(ctx(e)),
                        }
                        match predictive_singleton_pmf(&q) {
                            Ok(mix) => {
                                let closed = predictive_singleton_pmf_closed(&q).map_err(ctx)?;
                                worst_s = worst_s.max(mix.total_variation(&closed));
                                compared += 1;
                            }
                            Err(Error::NegligibleConditioningMass { .. }) => refused += 1,
                            Err(e) => return Err(ctx(e)),
                        }
                    }
                }
            }
        }
    }
    check(
        worst_l < 1e-8 && worst_s < 1e-8,
        format!("{compared} pairs ({refused} negligible-mass refusals), max TV lineage {worst_l:.2e}, singleton {worst_s:.2e}"),
    )
}

fn numerical_honesty() -> Outcome {
    let (mut flagged, mut returned) = (0usize, 0usize);
    for m in [100, 150, 200, 300] {
        for t in [1e-3, 3e-3, 0.01, 0.1, 0.3] {
            for theta in [0.5, 1.0, 9.5] {
                let p = params(theta, t);
                let results = [
                    ("lineage_pmf", lineage_pmf(m, &p)),
                    ("singleton_lineage_pmf", coalescent::ancestral::singleton_lineage_pmf(m, &p)),
                    (
                        "predictive_lineage_pmf",
                        predictive_lineage_pmf(&PredictiveQuery::new(m, 5, m / 2, p).unwrap()),
                    ),
                ];
                for (name, r) in results {
                    match r {
                        Ok(pmf) => {
                            returned += 1;
                            let bad = pmf.mass_defect > 1e-6 || pmf.probs.iter().any(|&v| !(0.0..=1.0).contains(&v));
                            if bad {
                                return Err(format!("{name} m={m} t={t} θ={theta}: defect {:.2e}", pmf.mass_defect));
                            }
                        }
                        Err(e) if e.is_numerical() => flagged += 1,
                        Err(e) => return Err(format!("{name} m={m} t={t} θ={theta}: unexpected {e}")),
                    }
                }
            }
        }
    }
    // the headline region must actually be refused
    let hard = lineage_pmf(100, &params(1.0, 0.01));
    let refused = matches!(hard, Err(Error::IllConditioned { min_reliable_t: Some(t), .. }) if t > 0.01);
    check(
        refused && flagged > 0 && returned > 0,
        format!("{flagged} flagged errors, {returned} clean pmfs, none with defect > 1e-6"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("Ewens MLE reproduction", mle_reproduction),
        ("block-process reproduction", block_process_reproduction),
        ("analytic vs simulated overlay", overlay),
        ("oracle exactness", oracle_exactness),
        ("distributional identity", mixture_identity),
        ("sufficiency", sufficiency),
        ("Good-Turing identities", good_turing),
        ("law of total probability", total_probability),
        ("dual-path equivalence", dual_paths),
        ("numerical honesty", numerical_honesty),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {:>2} PASS  {name}: {d} [{secs:.1}s]", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {d} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
