//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion outside `KNOWN_FAILING` fails.
//!
//! Two criteria are known not to hold for this model and are reported as FAIL
//! rather than relaxed: the reference ensemble gap (4) disagrees with the exact
//! value of the ensemble as stated, and the imaging crossover (11) does not
//! appear once every program copy is charged to the photon budget.

use qupload::css_sim::{CssState, Generator, Kind};
use qupload::decoder::{build_decoding_graph, exhaustive_min_weight_table};
use qupload::dense::{max_abs, random_density};
use qupload::f2::BitRow;
use qupload::harness::{compare_bound_vs_montecarlo, default_v_in, run_point, GadgetGraphs, GrowthConfig, PointResult};
use qupload::imaging::{hypothesis_test_sweep, imaging_run, ImagingConfig, PipelineNoise};
use qupload::moments::{empirical_gap, ensemble_gap_closed, ensemble_gap_dense, speedup_threshold_third_moment, CycleTest};
use qupload::replica::{build_delta3, g_poly, r_poly, trace_n_delta3_squared, trace_n_delta3_squared_dense};
use qupload::shadows::{separation_exponent, separation_threshold, shadow_weight, shadow_weight_exact, BrickworkSpec};
use qupload::stats::stream_rng;
use qupload::surface_code::{build_growth_layout_permissive, Sector};
use std::time::{Duration, Instant};

const KNOWN_FAILING: [usize; 2] = [4, 11];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn delta3_degeneracy() -> Verdict {
    let d = build_delta3(1).unwrap().matrix;
    let shape_ok = d.nrows() == 8 && d.ncols() == 8;
    let m = max_abs(&d);
    let r = [0.0, 0.3, 0.7, 1.0].map(|eta| r_poly(1, eta).abs()).into_iter().fold(0.0, f64::max);
    verdict(shape_ok && m <= 1e-12 && r <= 1e-12, format!("max|Δ3(1)| = {m:.1e}, max|R_1| = {r:.1e}"))
}

fn closed_form_vs_dense() -> Verdict {
    let mut worst = 0.0f64;
    for n in [2u32, 3] {
        for lambda in [0.0, 0.1, 0.3] {
            let closed = trace_n_delta3_squared(n, lambda).unwrap();
            let dense = trace_n_delta3_squared_dense(n as usize, lambda).unwrap();
            worst = worst.max((closed - dense).abs() / dense.abs());
        }
    }
    verdict(worst <= 1e-10, format!("worst relative error {worst:.2e} over n∈{{2,3}}, λ∈{{0,0.1,0.3}}"))
}

fn cycle_test_correctness() -> Verdict {
    let mut worst_z = 0.0f64;
    let mut misses = 0;
    let mut violations = 0.0;
    for i in 0..20u64 {
        let n = 1 + (i % 2) as usize;
        let lp = if i < 10 { 0.0 } else { 0.2 };
        let rho = random_density(1 << n, &mut stream_rng(300 + i, 0));
        let exact = (&rho * &rho * &rho).trace().re;
        let rep = CycleTest::new(&rho, lp, true).unwrap().run(100_000, 400 + i);
        let z = (rep.mean - exact).abs() / rep.std_error;
        worst_z = worst_z.max(z);
        misses += (!rep.within(exact, 3.0)) as usize;
        violations += rep.get("range_violations").unwrap();
    }
    verdict(
        misses == 0 && violations == 0.0,
        format!("20 instances, worst |z| = {worst_z:.2}, outside 3 SE: {misses}, range violations: {violations}"),
    )
}

fn gap_reproduction() -> Verdict {
    let target = 180.0 / 8640.0;
    let rep = empirical_gap(2, 0.0, 100_000, 44).unwrap();
    let exact = ensemble_gap_dense(2, 0.0).unwrap();
    let closed = ensemble_gap_closed(2, 1.0);
    let poly_ok = (closed - exact).abs() <= 1e-12 && g_poly(2, 1.0).is_finite();
    let z = (rep.mean - target) / rep.std_error;
    let z_exact = (rep.mean - exact) / rep.std_error;
    verdict(
        rep.within(target, 3.0) && poly_ok,
        format!(
            "empirical {:.5} ± {:.5} vs reference {target:.5} (z = {z:.1}); exact ensemble gap {exact:.6} (z = {z_exact:.2}); G-polynomial closed form matches dense: {poly_ok}",
            rep.mean, rep.std_error
        ),
    )
}

fn threshold_formulas() -> Verdict {
    let t = speedup_threshold_third_moment(1e-4).unwrap() / 1e-4;
    let moment_ok = ((t - 19.0 / 12.0) / (19.0 / 12.0)).abs() <= 1e-3;
    let mut exp_worst = 0.0f64;
    for lambda in [0.01, 0.1] {
        let lp = 1.0 - (1.0 - lambda) * (-lambda / 4.0f64).exp();
        exp_worst = exp_worst.max(separation_exponent(lambda, lp).unwrap().abs());
    }
    let s = separation_threshold(1e-4).unwrap() / 1e-4;
    let shadow_ok = ((s - 1.25) / 1.25).abs() <= 1e-3;
    verdict(
        moment_ok && exp_worst <= 1e-12 && shadow_ok,
        format!("moment threshold/λ = {t:.6} (19/12 = {:.6}); max |exponent| at boundary {exp_worst:.1e}; shadow threshold/λ = {s:.6}", 19.0 / 12.0),
    )
}

fn shadow_oracle() -> Verdict {
    let n = 8;
    let mut misses = Vec::new();
    let mut worst_z = 0.0f64;
    let mut first_layer = 0.0;
    let mut trivial_ok = true;
    let mut seed = 6000;
    for k in [1usize, 2, 4] {
        for d in [0usize, 1, 2, 4] {
            for lambda in [0.0, 0.1] {
                seed += 1;
                let spec = BrickworkSpec::new(n, d, (n - k) / 2).unwrap();
                let exact = shadow_weight_exact(&spec, k, lambda).unwrap();
                let rep = shadow_weight(&spec, k, lambda, 100_000, seed).unwrap();
                if d == 0 {
                    let third = 3f64.powi(-(k as i32));
                    trivial_ok &= exact == third && rep.mean == third;
                }
                if rep.std_error > 0.0 {
                    worst_z = worst_z.max((rep.mean - exact).abs() / rep.std_error);
                }
                if !rep.within(exact, 3.0) {
                    misses.push(format!("(k={k}, d={d}, λ={lambda})"));
                }
                first_layer += rep.get("first_layer_violations").unwrap();
            }
        }
    }
    verdict(
        misses.is_empty() && trivial_ok && first_layer == 0.0,
        format!(
            "24 grid points, worst |z| = {worst_z:.2}, outside 3 SE: {misses:?}; d=0 exact: {trivial_ok}; first-layer violations: {first_layer}"
        ),
    )
}

fn decoder_exactness() -> Verdict {
    let layout = build_growth_layout_permissive(3, 3).unwrap();
    let mut checked = 0usize;
    let mut bad = 0usize;
    for sector in Sector::BOTH {
        let g = build_decoding_graph(&layout, 3, sector).unwrap();
        let table = exhaustive_min_weight_table(&g, 3);
        let n = g.edges.len();
        let mut check = |set: &[usize]| {
            let syn = g.syndrome_of(set);
            let c = g.decode(&syn).unwrap();
            let (w, classes) = table[&syn];
            let class = 1u8 << (g.crossing_parity(&c) as u8);
            let closes = g.syndrome_of(&[set, c.as_slice()].concat()).is_empty();
            checked += 1;
            bad += (c.len() != w || classes & class == 0 || !closes) as usize;
        };
        check(&[]);
        for a in 0..n {
            check(&[a]);
            for b in a + 1..n {
                check(&[a, b]);
                for c in b + 1..n {
                    check(&[a, b, c]);
                }
            }
        }
    }
    verdict(bad == 0, format!("{checked} fault sets of weight ≤ 3 on d=3, T=3 memory; mismatches: {bad}"))
}

/// Stabilizer simulation of the noiseless gadget: random gauge outcomes are
/// drawn by the measurements themselves, and the frame built from them must
/// return the grown patch to the input logical eigenstate.
fn noiseless_identity_shots(d1: usize, d2: usize, shots: usize, seed: u64) -> usize {
    let layout = build_growth_layout_permissive(d1, d2).unwrap();
    let graphs = [
        build_decoding_graph(&layout, d2, Sector::X).unwrap(),
        build_decoding_graph(&layout, d2, Sector::Z).unwrap(),
    ];
    let n = layout.n_sites();
    let err_kind = [Kind::X, Kind::Z];
    let check_kind = [Kind::Z, Kind::X];
    let mut rng = stream_rng(seed, 0);
    let mut good = 0;
    for shot in 0..shots {
        let input_kind = if shot % 2 == 0 { Kind::Z } else { Kind::X };
        let input_sector = if input_kind == Kind::Z { Sector::X } else { Sector::Z };
        let mut gens = Vec::new();
        for (kind, sector) in [(Kind::Z, Sector::X), (Kind::X, Sector::Z)] {
            for c in layout.old.checks(sector) {
                gens.push(Generator {
                    kind,
                    support: BitRow::from_indices(n, c.sites.iter().map(|&q| layout.embed_old(q))),
                    negative: false,
                });
            }
            for q in layout.prep_sensitive(sector) {
                gens.push(Generator { kind, support: BitRow::from_indices(n, [q]), negative: false });
            }
        }
        gens.push(Generator {
            kind: input_kind,
            support: BitRow::from_indices(n, layout.old.logical_support(input_sector).iter().map(|&q| layout.embed_old(q))),
            negative: false,
        });
        let mut state = CssState::from_generators(n, gens).unwrap();
        let mut first: Vec<Vec<bool>> = graphs.iter().map(|g| vec![false; g.check_sites.len()]).collect();
        let mut stable = true;
        for round in 0..d2 {
            for (si, g) in graphs.iter().enumerate() {
                for (c, sites) in g.check_sites.iter().enumerate() {
                    let m = state.measure(check_kind[si], &BitRow::from_indices(n, sites.iter().copied()), &mut rng);
                    if round == 0 {
                        first[si][c] = m;
                    } else {
                        stable &= m == first[si][c];
                    }
                }
            }
        }
        for (si, g) in graphs.iter().enumerate() {
            let raw: Vec<bool> = g.gauge.iter().map(|&c| first[si][c]).collect();
            let (_, frame) = g.gauge_frame(&raw, &[]).unwrap();
            let mut fix = g.site_action(&[]);
            fix.xor_with(&frame);
            state.apply(err_kind[si], &fix);
        }
        let g = &graphs[input_sector.index()];
        let logical = BitRow::from_indices(n, g.logical_support.iter().copied());
        let restored = graphs.iter().enumerate().all(|(si, g)| {
            g.check_sites
                .iter()
                .all(|s| state.deterministic_value(check_kind[si], &BitRow::from_indices(n, s.iter().copied())) == Some(false))
        });
        if stable && restored && state.deterministic_value(input_kind, &logical) == Some(false) {
            good += 1;
        }
    }
    good
}

fn noiseless_identity() -> Verdict {
    let shots = 10_000;
    let mut parts = Vec::new();
    let mut all = true;
    for (i, d2) in [5usize, 7, 9].into_iter().enumerate() {
        let physical = noiseless_identity_shots(5, d2, shots, 800 + i as u64);
        let point = run_point(&GrowthConfig::new(5, d2, 0.0, shots as u64, 900 + i as u64)).unwrap();
        let graph_level = point.counts[0] as usize;
        all &= physical == shots && graph_level == shots;
        parts.push(format!("(5,{d2}): stabilizer {physical}/{shots}, decoder {graph_level}/{shots}"));
    }
    verdict(all, parts.join("; "))
}

fn floor_points() -> (Vec<PointResult>, Vec<PointResult>) {
    let growth = [5usize, 7, 9, 11]
        .iter()
        .map(|&d2| run_point(&GrowthConfig::new(5, d2, 0.005, 100_000, 1000 + d2 as u64)).unwrap())
        .collect();
    let memory = [3usize, 5, 7]
        .iter()
        .map(|&d| {
            let mut c = GrowthConfig::new(d, d, 0.005, 100_000, 2000 + d as u64);
            c.permissive = true;
            run_point(&c).unwrap()
        })
        .collect();
    (growth, memory)
}

fn floor_behaviour(growth: &[PointResult], memory: &[PointResult]) -> Verdict {
    let nonincreasing = growth.windows(2).all(|w| w[1].channel.q_ci.0 <= w[0].channel.q_ci.1);
    let last = growth.last().unwrap().q_hat() / 0.005;
    let band = (0.05..=20.0).contains(&last);
    let decays = memory.windows(2).all(|w| w[1].q_hat() < w[0].q_hat());
    let fmt = |ps: &[PointResult]| ps.iter().map(|p| format!("{:.2e}", p.q_hat())).collect::<Vec<_>>().join(", ");
    verdict(
        nonincreasing && band && decays,
        format!(
            "q̂(d2=5,7,9,11) = [{}]; q̂(11)/p = {last:.3}; memory q̂(d=3,5,7) = [{}]",
            fmt(growth),
            fmt(memory)
        ),
    )
}

fn bound_dominance(growth: &[PointResult]) -> Verdict {
    let degree = GadgetGraphs::new(&growth[0].config).unwrap().max_line_degree();
    let cmps: Vec<_> = growth.iter().map(|p| compare_bound_vs_montecarlo(p, degree, default_v_in(5))).collect();
    let in_regime: Vec<_> = cmps.iter().filter(|c| c.in_regime).collect();
    let holds = in_regime.iter().all(|c| c.holds == Some(true));
    let limit = qupload::harness::bound_regime_limit(degree);
    verdict(
        holds,
        format!(
            "{} of {} points in regime (D = {degree}, needs p < {limit:.2e}){}",
            in_regime.len(),
            cmps.len(),
            if in_regime.is_empty() { "; vacuous at p = 0.005" } else { "" }
        ),
    )
}

fn imaging_reproduction() -> Verdict {
    let cfg = ImagingConfig::default();
    let quiet = ImagingConfig { brightness: 0.999, ..cfg.clone() };
    let noiseless = imaging_run(&quiet, &PipelineNoise::noiseless(), 10_000, 5).unwrap().success;
    let grid: Vec<f64> = (0..9).map(|i| 1e-4 * 10f64.powf(i as f64 / 4.0)).collect();
    let sweep = hypothesis_test_sweep(&cfg, &grid).unwrap();
    let raw: Vec<f64> = sweep.iter().map(|s| s.raw.success_at_budget).collect();
    let up: Vec<f64> = sweep.iter().map(|s| s.uploaded.success_at_budget).collect();
    let monotone = raw.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let crosses = raw.iter().zip(&up).any(|(r, u)| u > r);
    let gap = raw.iter().zip(&up).map(|(r, u)| u - r).fold(f64::NEG_INFINITY, f64::max);
    let floor = raw.iter().chain(&up).copied().fold(f64::INFINITY, f64::min);
    let at = sweep.iter().min_by(|a, b| (a.lambda - 1e-3).abs().total_cmp(&(b.lambda - 1e-3).abs())).unwrap();
    let ratio = at.ratio.unwrap_or(f64::NAN);
    verdict(
        noiseless >= 0.99 && monotone && crosses && ratio >= 100.0,
        format!(
            "noiseless success {noiseless:.4}; raw success monotone: {monotone}; uploaded above raw anywhere: {crosses} (largest margin {gap:.1e}, lowest success on the grid {floor:.6}); N_raw/N_inj at λ={:.0e}: {ratio:.3}",
            at.lambda
        ),
    )
}

fn main() {
    let mut results: Vec<(usize, &str, Verdict, Duration, Duration)> = Vec::new();
    let mut run = |id: usize, name: &'static str, budget_s: u64, f: &mut dyn FnMut() -> Verdict| {
        let t0 = Instant::now();
        let v = f();
        let took = t0.elapsed();
        results.push((id, name, v, took, Duration::from_secs(budget_s)));
        let (id, name, v, took, budget) = results.last().unwrap();
        let ok = v.pass && took <= budget;
        println!(
            "criterion {id:>2} {}: {name} [{:.1} s]: {}",
            if ok { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            v.detail
        );
    };
    run(1, "Δ3 degeneracy", 1, &mut delta3_degeneracy);
    run(2, "closed form vs dense", 30, &mut closed_form_vs_dense);
    run(3, "cycle-test correctness", 120, &mut cycle_test_correctness);
    run(4, "ensemble gap reproduction", 120, &mut gap_reproduction);
    run(5, "threshold formulas", 1, &mut threshold_formulas);
    run(6, "shadow-weight oracle", 300, &mut shadow_oracle);
    run(7, "decoder exactness", 300, &mut decoder_exactness);
    run(8, "noiseless injection identity", 300, &mut noiseless_identity);
    let t0 = Instant::now();
    let (growth, memory) = floor_points();
    let sim = t0.elapsed();
    run(9, "floor behaviour", 1800, &mut || {
        let mut v = floor_behaviour(&growth, &memory);
        v.detail.push_str(&format!("; simulation {:.1} s", sim.as_secs_f64()));
        v
    });
    run(10, "bound dominance", 1800, &mut || bound_dominance(&growth));
    run(11, "imaging reproduction", 1800, &mut imaging_reproduction);

    let failed: Vec<usize> =
        results.iter().filter(|(_, _, v, took, budget)| !(v.pass && took <= budget)).map(|r| r.0).collect();
    let unexpected: Vec<usize> = failed.iter().copied().filter(|id| !KNOWN_FAILING.contains(id)).collect();
    println!("passed {}/{}; failing {:?}; known failing {:?}", results.len() - failed.len(), results.len(), failed, KNOWN_FAILING);
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
