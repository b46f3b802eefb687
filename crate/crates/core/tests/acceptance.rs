//! Acceptance suite: one PASS/FAIL line per criterion.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use quditlab::circuit::{detection_vector, network_unitary, triangular_phases, NoiseModel};
use quditlab::correlations::{bootstrap_errors, sample_counts, setting_rng};
use quditlab::linalg::{haar_vector, max_abs, unitarity_defect};
use quditlab::nonlocality::{
    cglmp_value, ideal_table, lhv_maximum, qutrit_classical_bound, qutrit_family_max,
    qutrit_family_value, satwap_classical_bound, satwap_value,
};
use quditlab::qkd::{key_rate, mutual_information, qber_threshold, Attack};
use quditlab::reference::{compare_with_reference, load_dataset, ComputedValue, ResultSet};
use quditlab::steering::{
    alice_steering_bases, lhs_bound, lhs_bound_check, random_separable, randomness_from_beta,
    steered_assemblage, steering_value, RandomnessOptions,
};
use quditlab::tomography::{
    cs_reconstruct, linear_inversion, measure_operators, operator_basis, sample_operators,
    MeasureOptions, Method, TomographyJob,
};
use quditlab::witness::{scenario_one_strategy, scenario_two_table, witness_best};
use quditlab::{fidelity, make_pure_state, maximally_entangled};

type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn within_budget(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(
        elapsed <= budget,
        format!("took {:.1} s, budget {:.0} s", elapsed.as_secs_f64(), budget.as_secs_f64()),
    )
}

/// Runs the reference comparison and fails on any gating row.
fn gate(id: &str, values: Vec<ComputedValue>) -> Result<f64, String> {
    let ds = load_dataset(id).map_err(err)?;
    let rep = compare_with_reference(
        &ResultSet {
            id: id.into(),
            values,
        },
        &ds,
    )
    .map_err(err)?;
    let worst = rep.rows.iter().map(|r| r.delta.abs()).fold(0.0, f64::max);
    if let Some(bad) = rep.rows.iter().find(|r| r.passed == Some(false)) {
        return Err(format!(
            "{} d={:?}: computed {} vs {} (tol {:?})",
            bad.quantity, bad.d, bad.computed, bad.reference, bad.tolerance
        ));
    }
    Ok(worst)
}

fn satwap_saturation() -> Check {
    let start = Instant::now();
    let mut values = Vec::new();
    let mut worst: f64 = 0.0;
    for d in 2..=8 {
        let v = satwap_value(&ideal_table(d).map_err(err)?).map_err(err)?.value;
        worst = worst.max((v - (2 * d - 2) as f64).abs());
        values.push(ComputedValue::new("satwap_tsirelson", d, v));
    }
    gate("table1", values)?;
    within_budget(start.elapsed(), Duration::from_secs(5))?;
    ensure(worst <= 1e-8, format!("max |I - (2d-2)| = {worst:.2e}"))?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn satwap_bounds() -> Check {
    let values = (2..=8)
        .map(|d| ComputedValue::new("satwap_classical", d, satwap_classical_bound(d)))
        .collect();
    let worst = gate("table1", values)?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn cglmp_values() -> Check {
    let mut values = Vec::new();
    for d in 2..=8 {
        let v = cglmp_value(&ideal_table(d).map_err(err)?).map_err(err)?.value;
        values.push(ComputedValue::new("cglmp_max_entangled", d, v));
    }
    let worst = gate("table1", values)?;
    Ok(format!("max deviation {worst:.1e}"))
}

fn qutrit_family() -> Check {
    let mut values = Vec::new();
    for xi in [1.0, 0.6451, (3f64.sqrt() - 1.0) / 2.0] {
        let (gamma, i_max) = qutrit_family_max(xi).map_err(err)?;
        values.push(ComputedValue::new("qutrit_family_max", 3, i_max).with_param(xi));
        values.push(ComputedValue::new("optimal_gamma", 3, gamma).with_param(xi));
    }
    let worst = gate("self-testing", values)?;
    let mut lhv_worst: f64 = 0.0;
    for k in 0..20 {
        let xi = -2.0 + 4.0 * k as f64 / 19.0;
        let m = lhv_maximum(3, |t| qutrit_family_value(t, xi).map(|r| r.value)).map_err(err)?;
        lhv_worst = lhv_worst.max((m - qutrit_classical_bound(xi)).abs());
    }
    ensure(lhv_worst <= 1e-9, format!("LHV enumeration off by {lhv_worst:.2e}"))?;
    Ok(format!("anchors within {worst:.1e}, LHV within {lhv_worst:.1e}"))
}

fn dimension_witness() -> Check {
    let start = Instant::now();
    for (d, f) in [(4, 0.25), (8, 0.125), (16, 0.0625)] {
        let s = scenario_one_strategy(d).map_err(err)?;
        let w = s.witness(&s.ideal_table().map_err(err)?).map_err(err)?;
        ensure(
            w.certified_dim == d && (w.f_value - f).abs() < 1e-9,
            format!("scenario I d={d}: f={} certified {}", w.f_value, w.certified_dim),
        )?;
    }
    for d in 2..=15 {
        let w = witness_best(&scenario_two_table(d, 1.0).map_err(err)?).map_err(err)?;
        ensure(
            w.certified_dim == d,
            format!("scenario II d={d}: certified {}", w.certified_dim),
        )?;
    }
    within_budget(start.elapsed(), Duration::from_secs(30))?;
    Ok("4, 8, 16 and d = 2..15 certified".into())
}

fn steering() -> Check {
    let mut worst: f64 = 0.0;
    for d in 2..=15 {
        let psi = maximally_entangled(d).density();
        let a = steered_assemblage(&psi, &alice_steering_bases(d).map_err(err)?).map_err(err)?;
        worst = worst.max((steering_value(&a).map_err(err)?.beta - 2.0).abs());
    }
    ensure(worst <= 1e-9, format!("max |beta - 2| = {worst:.2e}"))?;
    let values = [2, 4, 6, 8, 10, 12, 14, 15]
        .into_iter()
        .map(|d| ComputedValue::new("steering_lhs_bound", d, lhs_bound(d)))
        .collect();
    gate("steering", values)?;
    let mut max_excess = f64::MIN;
    for d in [2, 3] {
        let mut rng = setting_rng(2024, d as u64);
        let states: Vec<_> = (0..10_000).map(|_| random_separable(d, &mut rng)).collect();
        let rep = lhs_bound_check(&states).map_err(err)?;
        ensure(rep.within_bound, format!("d={d}: separable beta {} > {}", rep.max_beta, rep.bound))?;
        max_excess = max_excess.max(rep.max_beta - rep.bound);
    }
    Ok(format!("beta = 2 within {worst:.1e}; separable margin {max_excess:.2e}"))
}

fn randomness() -> Check {
    let opts = RandomnessOptions::default();
    let mut slowest = Duration::ZERO;
    let mut solve = |d: usize, beta: f64| -> Result<f64, String> {
        let t = Instant::now();
        let r = randomness_from_beta(d, beta, None, &opts).map_err(err)?;
        slowest = slowest.max(t.elapsed());
        Ok(r.min_entropy_bits)
    };
    let h2 = solve(2, 2.0)?;
    let h3 = solve(3, 2.0)?;
    ensure((h2 - 1.0).abs() <= 0.02, format!("d=2: {h2}"))?;
    ensure((h3 - 3f64.log2()).abs() <= 0.03, format!("d=3: {h3}"))?;
    let h_lhs = solve(2, lhs_bound(2))?;
    ensure(h_lhs.abs() <= 0.02, format!("at the LHS bound: {h_lhs}"))?;
    let lo = lhs_bound(2);
    let mut last = -1.0;
    for k in 0..10 {
        let beta = lo + (2.0 - lo) * k as f64 / 9.0;
        let h = solve(2, beta)?;
        ensure(h >= last - 1e-6, format!("not monotone at beta={beta}: {h} < {last}"))?;
        last = h;
    }
    within_budget(slowest, Duration::from_secs(60))?;
    Ok(format!(
        "H = {h2:.4}, {h3:.4}, {h_lhs:.1e} at bound; slowest solve {:.2} s",
        slowest.as_secs_f64()
    ))
}

fn tomography() -> Check {
    let start = Instant::now();
    let psi = maximally_entangled(4);
    let mut fmin: f64 = 1.0;
    for seed in [1, 2, 3] {
        let ops = sample_operators(4, 50, seed).map_err(err)?;
        let data =
            measure_operators(&psi.density(), &ops, 0, seed, MeasureOptions::default()).map_err(err)?;
        let rec = cs_reconstruct(&TomographyJob::new(4, data, Method::Cs)).map_err(err)?;
        fmin = fmin.min(fidelity(&rec.rho, &psi).map_err(err)?);
    }
    ensure(fmin >= 0.99, format!("CS fidelity {fmin}"))?;
    let rho = psi.density().werner(0.8);
    let data = measure_operators(&rho, &operator_basis(4).map_err(err)?, 0, 0, MeasureOptions::default())
        .map_err(err)?;
    let lin = linear_inversion(&data).map_err(err)?;
    let dev = max_abs(&(lin.matrix() - rho.matrix()));
    ensure(dev <= 1e-6, format!("linear inversion off by {dev:.2e}"))?;
    within_budget(start.elapsed(), Duration::from_secs(300))?;
    Ok(format!("CS fidelity >= {fmin:.6}; linear inversion within {dev:.1e}"))
}

fn qkd() -> Check {
    let mut values = Vec::new();
    for d in [2, 4, 8, 14] {
        values.push(ComputedValue::new(
            "key_rate_ideal",
            d,
            key_rate(1.0, d, Attack::Individual).map_err(err)?.r_sk,
        ));
        values.push(ComputedValue::new(
            "qber_threshold_individual_percent",
            d,
            qber_threshold(d, Attack::Individual).map_err(err)?,
        ));
    }
    let worst = gate("qkd", values)?;
    let i = mutual_information(0.9978, 2).map_err(err)?;
    ensure((i - 0.9774).abs() <= 1e-4, format!("I_AB = {i}"))?;
    Ok(format!("max deviation {worst:.3}; I_AB = {i:.5}"))
}

fn circuit() -> Check {
    let mut worst_p: f64 = 0.0;
    let mut worst_u: f64 = 0.0;
    for d in [2usize, 4, 8, 16] {
        let mut rng = setting_rng(7, d as u64);
        for _ in 0..1000 {
            let v = haar_vector(d, &mut rng);
            let s = triangular_phases(&make_pure_state(&v).map_err(err)?).map_err(err)?;
            let p = detection_vector(&s).map_err(err)?.dotc(&v).norm_sqr();
            worst_p = worst_p.max((p - 1.0).abs());
            worst_u = worst_u.max(unitarity_defect(&network_unitary(&s).map_err(err)?));
        }
    }
    ensure(worst_p <= 1e-10, format!("detection probability off by {worst_p:.2e}"))?;
    ensure(worst_u < 1e-10, format!("unitarity defect {worst_u:.2e}"))?;
    Ok(format!("|p - 1| <= {worst_p:.1e}, defect <= {worst_u:.1e}"))
}

fn statistics() -> Check {
    let ideal = ideal_table(2).map_err(err)?;
    let noise = NoiseModel::ideal();
    let stat = |t: &quditlab::correlations::CorrelationTable| satwap_value(t).map(|r| r.value);
    let totals = [1e3f64, 1e4, 1e5];
    let mut pts = Vec::new();
    for (k, total) in totals.iter().enumerate() {
        // Total shots are split over the four settings.
        let counts = sample_counts(&ideal, (*total / 4.0) as u64, &noise, 100 + k as u64).map_err(err)?;
        let (_, std) = bootstrap_errors(&counts, stat, 400, 9).map_err(err)?;
        pts.push((total.ln(), std.ln()));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
        / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
    ensure((slope + 0.5).abs() <= 0.1, format!("scaling exponent {slope:.3}"))?;

    let run = |seed| -> Result<Vec<u8>, String> {
        let t = sample_counts(&ideal_table(3).map_err(err)?, 500, &NoiseModel::werner(0.9), seed)
            .map_err(err)?;
        let (m, s) = bootstrap_errors(&t, stat, 50, seed).map_err(err)?;
        serde_json::to_vec(&(t, m, s)).map_err(err)
    };
    let (a, b, c) = (run(5)?, run(5)?, run(6)?);
    ensure(a == b, "same seed gave different bytes")?;
    ensure(a != c, "different seeds gave identical bytes")?;
    Ok(format!("exponent {slope:.3}; seeded output byte-identical"))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Check); 11] = [
        ("SATWAP saturation", satwap_saturation),
        ("SATWAP classical bounds", satwap_bounds),
        ("CGLMP maximally entangled values", cglmp_values),
        ("qutrit family anchors and LHV bound", qutrit_family),
        ("dimension witness", dimension_witness),
        ("steering", steering),
        ("one-sided DI randomness", randomness),
        ("tomography", tomography),
        ("QKD", qkd),
        ("circuit compiler", circuit),
        ("statistical machinery", statistics),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} ({secs:.2} s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} ({secs:.2} s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
