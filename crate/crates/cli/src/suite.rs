//! The verification suite behind `rsuq selftest` and the acceptance tests.
//!
//! Each criterion returns [`TestResult`]s whose checks carry their own
//! thresholds; a criterion passes when every check does.

use std::f64::consts::{LOG2_E, PI};
use std::time::Duration;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Geometric;

use rsuq::bounds::{self, ConstantsRegistry, ExcessVariant};
use rsuq::coding::{
    decode_stream, encode_stream, geometric_entropy, lattice_id, GolombCode, Mode, StreamHeader,
};
use rsuq::lattice::unit_ball_volume;
use rsuq::mc::{
    estimate_k_distribution, results_writer, run_trials, test_gaussian, test_same_distribution,
    test_uniform_ball, Check, RateEstimate, TestResult, TrialPlan,
};
use rsuq::{builtin_lattice, Description, GaussianNoise, Lrsuq, Quantizer, RsuqConfig};

use crate::{bounds_table, decode, encode, simulate, Table};

/// Published layered entropy and excess information: `n, h_L, lower, LRSUQ, LSPQ`.
pub const TABLE1: [(usize, f64, f64, f64, f64); 9] = [
    (1, 1.52632, 0.52077, 0.52077, 6.13777),
    (2, 3.26144, 0.41637, 1.13772, 4.03337),
    (3, 5.08819, 0.35103, 0.83193, 3.30136),
    (4, 6.96559, 0.30570, 0.66637, 2.92270),
    (5, 8.87490, 0.27212, 0.56065, 2.68912),
    (6, 10.80611, 0.24608, 0.48653, 2.52974),
    (7, 12.75325, 0.22520, 0.43130, 2.41363),
    (8, 14.71250, 0.20803, 0.38837, 2.32503),
    (24, 46.71338, 0.10070, 0.16082, 1.88437),
];

const ALPHA: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Budget {
    Quick,
    Full,
}

impl Budget {
    fn pick(self, quick: usize, full: usize) -> usize {
        match self {
            Budget::Quick => quick,
            Budget::Full => full,
        }
    }
}

pub type CriterionFn = fn(u64, Budget) -> rsuq::Result<Vec<TestResult>>;

pub struct Criterion {
    pub id: u8,
    pub title: &'static str,
    /// Wall-clock budget at full size.
    pub limit: Duration,
    pub run: CriterionFn,
}

pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion {
            id: 1,
            title: "Gaussian layered entropy and excess information table",
            limit: Duration::from_secs(5),
            run: table1,
        },
        Criterion {
            id: 2,
            title: "RSUQ error uniform over the ball (Z2, r = 0.5)",
            limit: Duration::from_secs(30),
            run: uniform_error,
        },
        Criterion {
            id: 3,
            title: "geometric stopping index (Z2, E8)",
            limit: Duration::from_secs(60),
            run: stopping_index,
        },
        Criterion {
            id: 4,
            title: "empirical rate below the RSUQ bound (Z2, A2, D4)",
            limit: Duration::from_secs(120),
            run: rate_bound,
        },
        Criterion {
            id: 5,
            title: "Gaussian channel simulation with LRSUQ (Z2)",
            limit: Duration::from_secs(180),
            run: gaussian_channel,
        },
        Criterion {
            id: 6,
            title: "redundancy arithmetic and lattice orderings",
            limit: Duration::from_secs(1),
            run: redundancy_arithmetic,
        },
        Criterion {
            id: 7,
            title: "Golomb code and RSQ1 container",
            limit: Duration::from_secs(30),
            run: coding_layer,
        },
        Criterion {
            id: 8,
            title: "deterministic command outputs",
            limit: Duration::from_secs(60),
            run: determinism,
        },
    ]
}

fn close(name: String, got: f64, want: f64, tol: f64) -> Check {
    Check::at_most(name, (got - want).abs(), tol)
}

/// `a > b`, as a check on `b − a ≤ −tol`.
fn exceeds(name: &str, a: f64, b: f64) -> Check {
    Check::at_most(name, b - a, -1e-9)
}

fn table1(seed: u64, _: Budget) -> rsuq::Result<Vec<TestResult>> {
    let mut out = Vec::new();
    for (n, hl, lower, lrsuq, lspq) in TABLE1 {
        let mut r = TestResult::new(&format!("table1_n{n}"), 0).with_seed(seed);
        let got = bounds::gaussian_layered_entropy(n)?;
        r.push(close("h_L".into(), got, hl, 1e-4));
        for (variant, want) in [
            (ExcessVariant::Lower, lower),
            (ExcessVariant::Lrsuq, lrsuq),
            (ExcessVariant::Lspq, lspq),
        ] {
            let v = bounds::excess_info_from(n, got, variant);
            r.push(close(format!("excess_{}", variant.name()), v, want, 1e-4));
        }
        out.push(r);
    }
    Ok(out)
}

fn uniform_error(seed: u64, budget: Budget) -> rsuq::Result<Vec<TestResult>> {
    let (n, r) = (2, 0.5);
    let samples = budget.pick(50_000, 100_000);
    let q = RsuqConfig::new(builtin_lattice("Zn", n)?, r, seed)?;
    let rec = run_trials(&q, &TrialPlan::uniform_ball(samples, 50.0, seed))?;
    let mut res = test_uniform_ball(&rec.errors, r, n, ALPHA)?.with_seed(seed);
    let mse = rec
        .errors
        .iter()
        .map(|e| e.iter().map(|v| v * v).sum::<f64>())
        .sum::<f64>()
        / samples as f64;
    let want = n as f64 * r * r / (n as f64 + 2.0);
    res.push(Check::at_most(
        "mse_rel_err",
        (mse / want - 1.0).abs(),
        0.01,
    ));
    Ok(vec![res])
}

fn stopping_index(seed: u64, budget: Budget) -> rsuq::Result<Vec<TestResult>> {
    let samples = budget.pick(20_000, 100_000);
    let plan = TrialPlan::uniform_ball(samples, 50.0, seed);
    let z2 = RsuqConfig::new(builtin_lattice("Zn", 2)?, 0.5, seed)?;
    let e8_lat = builtin_lattice("E8", 8)?;
    let e8 = RsuqConfig::new(e8_lat.clone(), e8_lat.packing_radius(), seed)?;
    let mut a = estimate_k_distribution(&z2, &plan, ALPHA)?;
    a.test = "k_geom_z2".into();
    let mut b = estimate_k_distribution(&e8, &plan, ALPHA)?;
    b.test = "k_geom_e8".into();
    Ok(vec![a, b])
}

fn rate_bound(seed: u64, budget: Budget) -> rsuq::Result<Vec<TestResult>> {
    let (r, tau) = (0.5, 50.0);
    let samples = budget.pick(20_000, 100_000);
    let mut out = Vec::new();
    for (name, n) in [("Zn", 2), ("A2", 2), ("Dn", 4)] {
        let q = RsuqConfig::new(builtin_lattice(name, n)?, r, seed)?;
        let rec = run_trials(&q, &TrialPlan::uniform_ball(samples, tau, seed))?;
        let est = RateEstimate::from_descriptions(&rec.descriptions, q.stop_probability())?;
        let log_mu = |rad: f64| unit_ball_volume(n).log2() + n as f64 * rad.log2();
        let lhs = est.total() - log_mu(tau);
        let rhs = -log_mu(r) + LOG2_E + 0.1;
        let mut res = TestResult::new(&format!("rate_{}{n}", name.trim_end_matches('n')), samples)
            .with_seed(seed);
        res.push(Check::at_most("hk_plus_hm_minus_log_mu", lhs, rhs));
        out.push(res);
    }
    Ok(out)
}

fn gaussian_channel(seed: u64, budget: Budget) -> rsuq::Result<Vec<TestResult>> {
    let samples = budget.pick(40_000, 200_000);
    let lat = builtin_lattice("Zn", 2)?;
    let at = |x: Vec<f64>, s: u64| -> rsuq::Result<Vec<Vec<f64>>> {
        let q = Lrsuq::new(GaussianNoise::new(2), lat.clone(), s)?;
        Ok(run_trials(&q, &TrialPlan::fixed_point(samples, x, s))?.errors)
    };
    let origin = at(vec![0.0, 0.0], seed)?;
    let far = at(vec![10.0, 10.0], seed.wrapping_add(1))?;
    let mut g0 = test_gaussian(&origin, 2, ALPHA)?.with_seed(seed);
    g0.test = "gaussian_x0".into();
    let mut g1 = test_gaussian(&far, 2, ALPHA)?.with_seed(seed.wrapping_add(1));
    g1.test = "gaussian_x10".into();
    let mut same = test_same_distribution(&origin, &far, ALPHA)?.with_seed(seed);
    same.test = "x0_vs_x10".into();
    Ok(vec![g0, g1, same])
}

fn redundancy_arithmetic(seed: u64, _: Budget) -> rsuq::Result<Vec<TestResult>> {
    let reg = ConstantsRegistry::builtin();
    let dims = [1usize, 2, 4, 8, 24, 48];
    let left = bounds::figure2_left(&dims, &reg)?;
    let right = bounds::figure2_right(&dims, &reg)?;

    let mut f = TestResult::new("formulas", 0).with_seed(seed);
    let log2e_48 = std::f64::consts::E.log2() / 48.0;
    f.push(close("log2e_over_48".into(), log2e_48, 0.030_056_1, 1e-7));
    let ord48 = 0.5 * (50.0 / (48.0 * ((PI / 24.0).sin() / (PI / 24.0)))).log2();
    f.push(close(
        "ordentlich_48".into(),
        bounds::ordentlich_ub(48)?,
        ord48,
        1e-9,
    ));
    f.push(exceeds(
        "ordentlich_48_above_log2e_over_48",
        ord48,
        log2e_48,
    ));
    f.push(close(
        "black_24".into(),
        left.value(24, "rsuq_any_lattice").unwrap_or(f64::NAN),
        LOG2_E / 24.0,
        1e-9,
    ));
    let ord8 = 0.5 * (10.0 / (8.0 * ((PI / 4.0).sin() / (PI / 4.0)))).log2();
    f.push(close(
        "ordentlich_8".into(),
        bounds::ordentlich_ub(8)?,
        ord8,
        1e-9,
    ));
    f.push(close("zador_ub_2".into(), bounds::zador_ub(2)?, 0.5, 1e-9));

    let mut o = TestResult::new("orderings", 0).with_seed(seed);
    let get = |rep: &bounds::BoundsReport, n, q: &str| rep.value(n, q).unwrap_or(f64::NAN);
    // the scalar lattice is optimal: RSUQ cannot beat it
    o.push(exceeds(
        "n1_any_above_lattice",
        get(&left, 1, "rsuq_any_lattice"),
        get(&left, 1, "lattice_best_covering"),
    ));
    for n in [2usize, 4] {
        o.push(exceeds(
            &format!("n{n}_any_above_lattice"),
            get(&left, n, "rsuq_any_lattice"),
            get(&left, n, "lattice_best_covering"),
        ));
        o.push(exceeds(
            &format!("n{n}_packing_above_lattice"),
            get(&left, n, "rsuq_best_packing"),
            get(&left, n, "lattice_best_covering"),
        ));
    }
    o.push(exceeds(
        "n8_lattice_above_any",
        get(&left, 8, "lattice_best_covering"),
        get(&left, 8, "rsuq_any_lattice"),
    ));
    o.push(exceeds(
        "n8_lattice_above_packing",
        get(&left, 8, "lattice_best_covering"),
        get(&left, 8, "rsuq_best_packing"),
    ));
    o.push(exceeds(
        "n48_ordentlich_above_any",
        get(&right, 48, "ordentlich_ub"),
        get(&right, 48, "rsuq_any_lattice"),
    ));
    // redundancies are non-negative
    let min = left
        .rows
        .iter()
        .chain(&right.rows)
        .map(|r| r.value_bits)
        .fold(f64::INFINITY, f64::min);
    o.push(Check::at_most("negated_min_redundancy", -min, 1e-12));
    Ok(vec![f, o])
}

/// Number of adjacent pairs in sorted order where one codeword prefixes the
/// next; zero exactly when the set is prefix-free.
fn prefix_violations(words: &mut [String]) -> usize {
    words.sort();
    words
        .windows(2)
        .filter(|w| w[1].starts_with(w[0].as_str()))
        .count()
}

fn coding_layer(seed: u64, budget: Budget) -> rsuq::Result<Vec<TestResult>> {
    let mut pf = TestResult::new("golomb_prefix_free", 16_000).with_seed(seed);
    let mut violations = 0;
    for m in 1..=16u64 {
        let code = GolombCode::with_parameter(m)?;
        let mut words: Vec<String> = (1..=1000)
            .map(|k| code.codeword(k))
            .collect::<rsuq::Result<_>>()?;
        violations += prefix_violations(&mut words);
    }
    pf.push(Check::at_most("violations", violations as f64, 0.0));

    let draws = budget.pick(200_000, 1_000_000);
    let mut len = TestResult::new("golomb_mean_length", draws).with_seed(seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (label, p) in [("p0.2", 0.2), ("p0.5", 0.5), ("p_pi4", PI / 4.0)] {
        let code = GolombCode::for_probability(p)?;
        let geom = Geometric::new(p).map_err(|e| rsuq::Error::InvalidParameter(e.to_string()))?;
        let total: u64 = (0..draws)
            .map(|_| code.codeword_len(rng.sample(geom) + 1))
            .sum();
        let mean = total as f64 / draws as f64;
        len.push(Check::at_most(
            format!("{label}_mean_minus_entropy"),
            mean - geometric_entropy(p),
            1.0,
        ));
    }

    let count = 1000usize;
    let mut rt = TestResult::new("rsq1_round_trip", count).with_seed(seed);
    let lat = builtin_lattice("Dn", 4)?;
    let descs: Vec<Description> = (0..count)
        .map(|_| Description {
            k: 1 + rng.sample(Geometric::new(0.3).expect("valid p")),
            coords: (0..4).map(|_| rng.random_range(-5000i64..=5000)).collect(),
        })
        .collect();
    let header = StreamHeader {
        n: 4,
        lattice_id: lattice_id(&lat),
        scale: 0.5 / lat.packing_radius(),
        param: 0.5,
        mode: Mode::Ball,
        seed,
        count: count as u64,
        coord_bound: 5000,
    };
    let bytes = encode_stream(&header, &descs)?;
    let (h2, back) = decode_stream(&bytes)?;
    let again = encode_stream(&h2, &back)?;
    let mismatches =
        back.iter().zip(&descs).filter(|(a, b)| a != b).count() + usize::from(h2 != header);
    rt.push(Check::at_most(
        "mismatched_descriptions",
        mismatches as f64,
        0.0,
    ));
    rt.push(Check::at_most(
        "reencode_differs",
        f64::from(u8::from(again != bytes)),
        0.0,
    ));
    Ok(vec![pf, len, rt])
}

fn vqf_sample(seed: u64, count: usize, n: usize) -> Vec<u8> {
    let plan = TrialPlan::uniform_ball(count, 20.0, seed);
    let xs: Vec<Vec<f64>> = (0..count as u64)
        .map(|i| plan.input(i, n).expect("dimension matches"))
        .collect();
    rsuq::coding::write_vectors(n, &xs).expect("consistent dimensions")
}

fn determinism(seed: u64, budget: Budget) -> rsuq::Result<Vec<TestResult>> {
    let count = budget.pick(200, 2000);
    let cli = |e: crate::CliError| rsuq::Error::InvalidParameter(e.to_string());
    let input = vqf_sample(seed, count, 2);
    let mut res = TestResult::new("determinism", count).with_seed(seed);
    let run = || -> rsuq::Result<Vec<Vec<u8>>> {
        let enc = encode(&input, builtin_lattice("A2", 2)?, 0.5, seed).map_err(cli)?;
        let dec = decode(&enc.bytes).map_err(cli)?;
        let sim = simulate(&input, builtin_lattice("Zn", 2)?, 1.0, seed).map_err(cli)?;
        let mut out = vec![
            enc.bytes,
            enc.summary.into_bytes(),
            dec.bytes,
            sim.bytes,
            sim.summary.into_bytes(),
        ];
        for table in [Table::Table1, Table::Figure2Left, Table::Figure2Right] {
            out.push(
                bounds_table(table, &table.default_dims(), None)
                    .map_err(cli)?
                    .csv
                    .into_bytes(),
            );
        }
        let mut w = results_writer(Vec::new())?;
        for r in redundancy_arithmetic(seed, budget)? {
            r.write_rows(&mut w)?;
        }
        out.push(
            w.into_inner()
                .map_err(|e| rsuq::Error::Io(e.into_error()))?,
        );
        Ok(out)
    };
    let (a, b) = (run()?, run()?);
    let differing = a.iter().zip(&b).filter(|(x, y)| x != y).count();
    res.push(Check::at_most("differing_outputs", differing as f64, 0.0));
    Ok(vec![res])
}
