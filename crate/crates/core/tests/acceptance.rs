//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Run a subset by passing criterion numbers:
//! `cargo test -p levelstat-core --test acceptance -- 2 7`.

mod common;

use std::time::{Duration, Instant};

use common::{all_sectors, integrate, kron_hamiltonian, max_multiset_distance};
use levelstat_core::chain::{build_hamiltonian, enumerate_sector_basis, ChainSpec, Couplings};
use levelstat_core::equilibration::{
    bound_farrelly, bound_short, bound_theorem1, bound_theorem1_q2_corollary, mu_q_resonant_sum, random_observable,
    random_state, DiagonalEnsemble,
};
use levelstat_core::formfactor::{self as ff, crossover, empirical_sff, k2_analytic, k2_time_average};
use levelstat_core::pipeline::{chain_spectrum, qstats, QStatsParams, QStatsSummary, SpectrumSource};
use levelstat_core::resonance::{
    exceptional_multiplicity, expected_exceptional, find_violations, monte_carlo_expected_exceptional, n_epsilon,
};
use levelstat_core::rng::derive_rng;
use levelstat_core::spectral::{bulk, eigenvalues, spacings, BULK_TRIM};
use levelstat_core::stats::{bootstrap_mean, mean_ratio_references, ratios, small_gap_probability, SpacingLaw};
use levelstat_core::{EnsembleKind, EnsembleSpec, Provenance, Spectrum};
use rand::Rng;

const GOE_MEAN_R: f64 = 0.535898;
const POISSON_MEAN_R: f64 = 0.386294;

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Outcome { pass, detail }
    }
}

fn within_budget(elapsed: Duration, minutes: f64) -> bool {
    elapsed.as_secs_f64() < minutes * 60.0
}

fn goe_q1_summary() -> QStatsSummary {
    let spec = EnsembleSpec::new(EnsembleKind::Goe, 2000, 1001).unwrap();
    let spectra = SpectrumSource::Ensemble { spec, samples: 20 }.spectra().unwrap();
    let params = QStatsParams {
        q: 1,
        seed: 1001,
        ..QStatsParams::default()
    };
    qstats(&spectra, &params).unwrap().summary
}

fn criterion_1(summary: &QStatsSummary, elapsed: Duration) -> Outcome {
    let dr = (summary.mean_ratio - GOE_MEAN_R).abs();
    let pass = dr < 0.01 && summary.ks_goe_ratio < 0.02 && within_budget(elapsed, 5.0);
    Outcome::new(
        pass,
        format!(
            "GOE N=2000 x20 q=1: <r>={:.6} (|d|={dr:.2e} < 0.01), KS_goe={:.4} (< 0.02), {:.1}s (< 300s)",
            summary.mean_ratio,
            summary.ks_goe_ratio,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let spec = EnsembleSpec::new(EnsembleKind::Goe, 1200, 1002).unwrap();
    let spectra = SpectrumSource::Ensemble { spec, samples: 1 }.spectra().unwrap();
    let params = QStatsParams {
        q: 2,
        seed: 1002,
        ..QStatsParams::default()
    };
    let s = qstats(&spectra, &params).unwrap().summary;
    let elapsed = start.elapsed();
    let dr = (s.mean_ratio - POISSON_MEAN_R).abs();
    let pass = dr < 0.003 && s.ks_poisson_ratio < 0.02 && within_budget(elapsed, 10.0);
    Outcome::new(
        pass,
        format!(
            "GOE N=1200 q=2: <r>={:.6} (|d|={dr:.2e} < 0.003), KS_poisson={:.4} (< 0.02), {} sums, {:.1}s (< 600s)",
            s.mean_ratio,
            s.ks_poisson_ratio,
            s.sums_per_spectrum[0],
            elapsed.as_secs_f64()
        ),
    )
}

fn ratio_only(spectra: Vec<Spectrum>, q: usize, seed: u64) -> QStatsSummary {
    let params = QStatsParams {
        q,
        seed,
        ..QStatsParams::default()
    };
    qstats(&spectra, &params).unwrap().summary
}

fn criterion_3() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    let mut run = |label: String, spectra: Vec<Spectrum>, q: usize| {
        let start = Instant::now();
        let s = ratio_only(spectra, q, 1003);
        let elapsed = start.elapsed();
        let dr = (s.mean_ratio - POISSON_MEAN_R).abs();
        let ok = dr < 0.01 && within_budget(elapsed, 15.0);
        pass &= ok;
        parts.push(format!(
            "{label} q={q}: <r>={:.4} (|d|={dr:.1e}) {:.0}s",
            s.mean_ratio,
            elapsed.as_secs_f64()
        ));
    };
    let goe = EnsembleSpec::new(EnsembleKind::Goe, 200, 1003).unwrap();
    run("GOE N=200".into(), SpectrumSource::Ensemble { spec: goe, samples: 1 }.spectra().unwrap(), 3);
    for (sites, q) in [(16, 3), (14, 4)] {
        let spec = ChainSpec::maximally_resolved(sites).unwrap();
        let s = chain_spectrum(&spec).unwrap();
        run(format!("chain L={sites} (dim {})", s.len()), vec![s], q);
    }
    Outcome::new(pass, format!("{} (each |d| < 0.01, < 900s)", parts.join("; ")))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let spec = ChainSpec::maximally_resolved(18).unwrap();
    let s = chain_spectrum(&spec).unwrap();
    let r = ratios(bulk(&spacings(&s.energies), BULK_TRIM)).unwrap();
    let boot = bootstrap_mean(&r.ratios, 2000, 1004).unwrap();
    let elapsed = start.elapsed();
    let d_goe = (boot.mean - GOE_MEAN_R).abs();
    let d_poisson = (boot.mean - POISSON_MEAN_R).abs();
    let margin = d_poisson - d_goe;
    let pass = margin >= 3.0 * boot.stderr && within_budget(elapsed, 20.0);
    Outcome::new(
        pass,
        format!(
            "chain L=18 sector dim {}: <r>={:.4} +- {:.4}; d_poisson - d_goe = {margin:.4} (>= 3 se = {:.4}), {:.1}s",
            s.len(),
            boot.mean,
            boot.stderr,
            3.0 * boot.stderr,
            elapsed.as_secs_f64()
        ),
    )
}

fn criterion_5(summary: &QStatsSummary) -> Outcome {
    let eps = summary.small_gap_epsilon;
    let expected = small_gap_probability(eps, SpacingLaw::Goe);
    let rel = summary.small_gap_fraction / expected - 1.0;
    let pass = summary.ks_wigner_spacing < 0.03 && rel.abs() < 0.3;
    Outcome::new(
        pass,
        format!(
            "GOE N=2000 x20 unfolded: KS_wigner={:.4} (< 0.03); P(s<{eps})={:.5} vs {:.5} ({:+.1}%, within 30%) over {} spacings",
            summary.ks_wigner_spacing,
            summary.small_gap_fraction,
            expected,
            100.0 * rel,
            summary.spacing_count
        ),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = derive_rng(1006, "acceptance/bounds", 0);
    let (mut checks, mut failures, mut resonant, mut corollary_failures) = (0, 0, 0, 0);
    let mut worst = 0.0f64;
    for trial in 0..200 {
        let d = 3 + trial % 8;
        let q: u32 = if trial % 2 == 0 { 2 } else { 3 };
        let integer = trial % 4 < 2;
        let energies: Vec<f64> = if integer {
            if trial % 8 < 2 {
                (0..d).map(|i| i as f64).collect()
            } else {
                let mut set = std::collections::BTreeSet::new();
                while set.len() < d {
                    set.insert(rng.random_range(0..3 * d as i64));
                }
                set.into_iter().map(|x| x as f64).collect()
            }
        } else {
            let mut e: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            e.sort_by(f64::total_cmp);
            e
        };
        let c = random_state(d, &mut rng).unwrap();
        let a = random_observable(d, &mut rng).unwrap();
        let omega = DiagonalEnsemble::from_amplitudes(&c).unwrap();
        let spread = energies[d - 1] - energies[0];
        let tol = if integer { 0.0 } else { 1e-9 * spread };
        let mu = mu_q_resonant_sum(&energies, &c, &a, q, tol).unwrap().abs();
        let spectrum = Spectrum::new(energies.clone(), Provenance::External { label: "bounds".into() }).unwrap();
        let set = find_violations(&spectrum, q as usize, tol).unwrap();
        let n_ql = exceptional_multiplicity(&set).n_ql;
        if !set.is_empty() {
            resonant += 1;
        }
        let mut bounds = vec![bound_theorem1(&a, &omega, q, n_ql)];
        if q == 2 {
            let n_eps = n_epsilon(&energies, 1e-9 * spread).unwrap();
            bounds.push(bound_farrelly(&a, &omega, n_eps));
            if set.is_empty() {
                bounds.push(bound_short(&a, &omega));
            }
            if mu > bound_theorem1_q2_corollary(&a, &omega, n_ql) {
                corollary_failures += 1;
            }
        }
        for b in bounds {
            checks += 1;
            worst = worst.max(mu / b);
            if mu > b {
                failures += 1;
            }
        }
    }
    Outcome::new(
        failures == 0,
        format!(
            "200 instances ({resonant} with resonances), {checks} bound checks, {failures} violations, \
             max |mu_q|/bound = {worst:.3}; displayed q=2 corollary exceeded {corollary_failures} times (not judged)"
        ),
    )
}

fn criterion_7() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for (i, (sites, count)) in [(10u32, 1u64 << 10), (12, 50), (14, 14)].into_iter().enumerate() {
        let mc = monte_carlo_expected_exceptional(count, sites, 4000, 1007 + i as u64).unwrap();
        let exact = expected_exceptional(count, sites);
        let z = (mc.estimate - exact) / mc.stderr;
        pass &= z.abs() < 3.0;
        parts.push(format!("(L={sites},|S|={count}): MC {:.4e} vs {exact:.4e}, z={z:+.2}", mc.estimate));
    }
    let limit = expected_exceptional(1u64 << 40, 40);
    let dl = (limit - std::f64::consts::E).abs();
    pass &= dl < 1e-6;
    Outcome::new(pass, format!("{}; c=1 L=40: |<N> - e| = {dl:.1e} (< 1e-6)", parts.join("; ")))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let mut parts = Vec::new();
    let mut pass = true;

    let mut continuity = 0.0f64;
    for n in [2usize, 17, 400, 1000, 65_536] {
        let nf = n as f64;
        let ts = crossover(nf);
        for kind in [EnsembleKind::Gue, EnsembleKind::Goe] {
            let jump = (ff::k2_ramp(ts, nf, kind) - ff::k2_plateau(ts, nf, kind)).abs();
            continuity = continuity.max(jump / ff::k2_plateau(ts, nf, kind));
        }
    }
    let ok = continuity <= 4.0 * f64::EPSILON;
    pass &= ok;
    parts.push(format!("branch continuity rel. jump {continuity:.1e} (<= 4 ulp) {}", flag(ok)));

    let n = 1000;
    let gue = k2_time_average(n as f64, n, EnsembleKind::Gue);
    let d = (gue - 1.0 / (std::f64::consts::PI * n as f64)).abs();
    let ok = d < 1e-10;
    pass &= ok;
    parts.push(format!("GUE avg at T=N: |d|={d:.1e} {}", flag(ok)));

    let n = 1000;
    let t = n as f64;
    let ts = crossover(t);
    let quad = integrate(&|x| k2_analytic(x, n, EnsembleKind::Goe), 0.0, t.min(ts), 1e-15) / t;
    let printed = ff::goe_printed_bracket() / t;
    let d = (quad - printed).abs();
    let ok = d < 1e-10;
    pass &= ok;
    parts.push(format!(
        "GOE bracket/T printed {printed:.10e} vs quadrature {quad:.10e}: |d|={d:.2e} {} (exact-integral bracket differs by {:.1e})",
        flag(ok),
        (ff::goe_bracket_exact() / t - quad).abs()
    ));

    let n = 400;
    let spec = EnsembleSpec::new(EnsembleKind::Gue, n, 1008).unwrap();
    let lo = 2.0 * crossover(n as f64);
    let times = ff::linear_grid(lo, 4000.0, 300).unwrap();
    let curve = empirical_sff(&spec, &times, 200).unwrap();
    let (mean, se) = curve.window_average(lo, 4000.0).unwrap();
    let z = (mean - 1.0 / n as f64) / se;
    let ok = z.abs() < 3.0;
    pass &= ok;
    parts.push(format!("GUE N=400 x200 plateau {mean:.5e} +- {se:.1e} vs 1/N, z={z:+.2} {}", flag(ok)));

    let elapsed = start.elapsed();
    let ok = within_budget(elapsed, 30.0);
    pass &= ok;
    parts.push(format!("{:.1}s", elapsed.as_secs_f64()));
    Outcome::new(pass, parts.join("; "))
}

fn criterion_9() -> Outcome {
    let mut parts = Vec::new();
    let mut pass = true;
    for sites in [8, 10] {
        let c = Couplings::default();
        let full = eigenvalues(&kron_hamiltonian(sites, &c), Provenance::External { label: "kron".into() }).unwrap();
        let mut union = Vec::new();
        let mut blocks = 0;
        for spec in all_sectors(sites, c) {
            let basis = enumerate_sector_basis(&spec).unwrap();
            if basis.dimension() == 0 {
                continue;
            }
            blocks += 1;
            let h = build_hamiltonian(&basis);
            union.extend(eigenvalues(&h, Provenance::Chain { spec }).unwrap().energies);
        }
        let ok = union.len() == full.len() && max_multiset_distance(&union, &full.energies) < 1e-10;
        pass &= ok;
        let d = if union.len() == full.len() {
            format!("{:.1e}", max_multiset_distance(&union, &full.energies))
        } else {
            format!("size {} vs {}", union.len(), full.len())
        };
        parts.push(format!("L={sites}: {blocks} blocks, max |d| = {d}"));
    }
    Outcome::new(pass, format!("{} (< 1e-10)", parts.join("; ")))
}

fn flag(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAIL"
    }
}

fn main() {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let wants = |k: u32| selected.is_empty() || selected.contains(&k);
    let refs = mean_ratio_references();
    println!(
        "acceptance: reference <r> goe={:.6} poisson={:.6}",
        refs.goe, refs.poisson
    );

    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut record = |k: u32, name: &'static str, outcome: Outcome| {
        println!(
            "criterion {k} [{name}]: {} | {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            outcome.detail
        );
        results.push((k, name, outcome));
    };

    if wants(1) || wants(5) {
        let start = Instant::now();
        let summary = goe_q1_summary();
        let elapsed = start.elapsed();
        if wants(1) {
            record(1, "GOE q=1 ratios", criterion_1(&summary, elapsed));
        }
        if wants(5) {
            record(5, "unfolded GOE spacings", criterion_5(&summary));
        }
    }
    if wants(2) {
        record(2, "GOE q=2 level attraction", criterion_2());
    }
    if wants(3) {
        record(3, "q=3,4 Poisson ratios", criterion_3());
    }
    if wants(4) {
        record(4, "chain q=1 chaos marker", criterion_4());
    }
    if wants(6) {
        record(6, "bound suite", criterion_6());
    }
    if wants(7) {
        record(7, "expected-violator formula", criterion_7());
    }
    if wants(8) {
        record(8, "spectral form factor", criterion_8());
    }
    if wants(9) {
        record(9, "sector completeness", criterion_9());
    }

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} passed, {} failed{}",
        results.len() - failed.len(),
        failed.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" (criteria {failed:?})")
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
