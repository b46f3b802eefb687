use std::fs::{self, File};

use anyhow::{Context, Result};
use serde_json::{json, Value};

use quditlab::circuit::{triangular_phases_with, NoiseModel, PsPlacement};
use quditlab::correlations::{bootstrap_errors, simulate_table, CorrelationTable};
use quditlab::io::MatrixJson;
use quditlab::nonlocality::{
    cglmp_value, qutrit_family_max, qutrit_family_value, satwap_bases, satwap_value, BellResult,
};
use quditlab::qkd::{key_rate, qber_threshold, Attack};
use quditlab::sdp::SdpTolerances;
use quditlab::state::partially_entangled_qutrit;
use quditlab::steering::{
    alice_steering_bases, randomness_from_beta, steering_bases, steering_value_from_table,
    RandomnessOptions,
};
use quditlab::tomography::{
    epsilon_heuristic, measure_operators, operator_basis, reconstruct, sample_operators,
    MeasureOptions, Method, TomographyJob,
};
use quditlab::witness::{scenario_one_strategy, witness_bound};
use quditlab::{fidelity, maximally_entangled, MeasurementBasis, PureState};

use crate::args::{
    AttackArg, BellArgs, CompileArgs, Inequality, Placement, QkdArgs, RandomnessArgs, Scenario,
    SimArgs, SteeringArgs, TomoArgs, TomoMethod, WitnessArgs,
};
use crate::output::Output;
use crate::CliError;

fn insert(v: &mut Value, fields: Value) {
    if let (Some(dst), Value::Object(src)) = (v.as_object_mut(), fields) {
        dst.extend(src);
    }
}

fn noise(sim: &SimArgs) -> Result<NoiseModel> {
    Ok(sim.noise.parse::<NoiseModel>()?)
}

/// Bootstrap standard deviation of `stat` for sampled tables.
fn error_bar<F>(table: &CorrelationTable, sim: &SimArgs, stat: F) -> Result<Option<f64>>
where
    F: Fn(&CorrelationTable) -> quditlab::Result<f64>,
{
    if sim.shots == 0 || sim.bootstrap < 2 {
        return Ok(None);
    }
    // Offset seed so resample streams are independent of the sampling streams.
    let (_, std) = bootstrap_errors(table, stat, sim.bootstrap, sim.seed.wrapping_add(1))?;
    Ok(Some(std))
}

fn run_header(sim: &SimArgs) -> Value {
    json!({"shots": sim.shots, "seed": sim.seed, "noise": sim.noise})
}

pub fn bell(a: &BellArgs) -> Result<Output> {
    let model = noise(&a.sim)?;
    let (psi, gamma) = match a.inequality {
        Inequality::Xi => {
            if a.d != 3 {
                return Err(CliError::Usage("the xi family is defined for d = 3".into()).into());
            }
            let gamma = match a.gamma {
                Some(g) => g,
                None => qutrit_family_max(a.xi)?.0,
            };
            (partially_entangled_qutrit(gamma), Some(gamma))
        }
        _ => {
            if a.gamma.is_some() {
                return Err(CliError::Usage("--gamma applies to --inequality xi only".into()).into());
            }
            (maximally_entangled(a.d), None)
        }
    };
    let (alice, bob) = satwap_bases(a.d)?;
    let table = simulate_table(&psi.density(), &alice, &bob, a.sim.shots, &model, a.sim.seed)?;
    let xi = a.xi;
    let eval = |t: &CorrelationTable| -> quditlab::Result<BellResult> {
        match a.inequality {
            Inequality::Satwap => satwap_value(t),
            Inequality::Cglmp => cglmp_value(t),
            Inequality::Xi => qutrit_family_value(t, xi),
        }
    };
    let mut r = eval(&table)?;
    if let Some(std) = error_bar(&table, &a.sim, |t| eval(t).map(|r| r.value))? {
        r = r.with_std(std);
    }
    if let Some(path) = &a.table {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        table.write_csv(f)?;
    }
    let name = match a.inequality {
        Inequality::Satwap => "satwap",
        Inequality::Cglmp => "cglmp",
        Inequality::Xi => "xi",
    };
    let mut v = serde_json::to_value(&r)?;
    insert(&mut v, json!({"inequality": name, "d": a.d}));
    insert(&mut v, run_header(&a.sim));
    if a.inequality == Inequality::Xi {
        insert(&mut v, json!({"xi": xi, "gamma": gamma}));
    }
    Ok(Output::Record(v))
}

pub fn witness(a: &WitnessArgs) -> Result<Output> {
    let model = noise(&a.sim)?;
    let (table, labels) = match a.scenario {
        Scenario::One => {
            let s = scenario_one_strategy(a.d)?;
            let t = simulate_table(
                &s.state.density(),
                &s.alice_bases,
                &s.bob_bases,
                a.sim.shots,
                &model,
                a.sim.seed,
            )?;
            let (y, y2, x) = s.witness_labels;
            let pos = |labels: &[usize], l: usize| labels.iter().position(|&m| m == l).unwrap_or(0);
            let idx = (pos(&s.bob_labels, y), pos(&s.bob_labels, y2), pos(&s.alice_labels, x));
            (t, (idx, Some(s.witness_labels)))
        }
        Scenario::Two => {
            if a.d < 2 {
                return Err(CliError::Usage("need d >= 2".into()).into());
            }
            let c = vec![MeasurementBasis::computational(a.d)];
            let rho = maximally_entangled(a.d).density();
            let t = simulate_table(&rho, &c, &c, a.sim.shots, &model, a.sim.seed)?;
            (t, ((0, 0, 0), None))
        }
    };
    let ((y, y2, x), game_labels) = labels;
    let mut r = witness_bound(&table, y, y2, x)?;
    if let Some(l) = game_labels {
        r.settings_used = l;
    }
    let std = error_bar(&table, &a.sim, |t| {
        witness_bound(t, y, y2, x).map(|w| w.dimension_bound)
    })?;
    let mut v = serde_json::to_value(r)?;
    let scenario = match a.scenario {
        Scenario::One => "I",
        Scenario::Two => "II",
    };
    insert(&mut v, json!({"scenario": scenario, "d": a.d, "D_std": std}));
    insert(&mut v, run_header(&a.sim));
    Ok(Output::Record(v))
}

fn steering_table(d: usize, sim: &SimArgs) -> Result<CorrelationTable> {
    let model = noise(sim)?;
    let alice = alice_steering_bases(d)?;
    let bob = steering_bases(d)?;
    Ok(simulate_table(
        &maximally_entangled(d).density(),
        &alice,
        &bob,
        sim.shots,
        &model,
        sim.seed,
    )?)
}

pub fn steering(a: &SteeringArgs) -> Result<Output> {
    let table = steering_table(a.d, &a.sim)?;
    let mut r = steering_value_from_table(&table)?;
    if let Some(std) = error_bar(&table, &a.sim, |t| steering_value_from_table(t).map(|r| r.beta))? {
        r = r.with_std(std);
    }
    let mut v = serde_json::to_value(r)?;
    insert(&mut v, json!({"d": a.d, "violates": r.violates()}));
    insert(&mut v, run_header(&a.sim));
    Ok(Output::Record(v))
}

pub fn randomness(a: &RandomnessArgs) -> Result<Output> {
    if a.x_star.is_some_and(|x| x > 1) {
        return Err(CliError::Usage("--x-star must be 0 or 1".into()).into());
    }
    let beta = match a.beta {
        Some(b) => b,
        None => steering_value_from_table(&steering_table(a.d, &a.sim)?)?.beta,
    };
    let mut options = if a.large {
        RandomnessOptions::large()
    } else {
        RandomnessOptions::default()
    };
    options.tolerances = SdpTolerances {
        feasibility: a.sdp.sdp_tol,
        gap: a.sdp.sdp_tol,
        max_iterations: a.sdp.sdp_max_iter,
    };
    let r = randomness_from_beta(a.d, beta, a.x_star, &options)?;
    let mut v = serde_json::to_value(r)?;
    insert(&mut v, json!({"d": a.d, "beta": beta}));
    if a.beta.is_none() {
        insert(&mut v, run_header(&a.sim));
    }
    Ok(Output::Record(v))
}

pub fn tomo(a: &TomoArgs) -> Result<Output> {
    if !(0.0..=1.0).contains(&a.visibility) {
        return Err(CliError::Usage("--visibility must lie in [0, 1]".into()).into());
    }
    let target = maximally_entangled(a.d);
    let rho = target.density().werner(a.visibility);
    let ops = match a.ops {
        Some(m) => sample_operators(a.d, m, a.seed)?,
        None => operator_basis(a.d)?,
    };
    let data = measure_operators(
        &rho,
        &ops,
        a.shots,
        a.seed,
        MeasureOptions {
            simulate_mesh: a.mesh,
        },
    )?;
    let method = match a.method {
        TomoMethod::Cs => Method::Cs,
        TomoMethod::Linear => Method::Linear,
    };
    let mut job = TomographyJob::new(a.d, data, method);
    let epsilon = epsilon_heuristic(&job.measurements, a.epsilon_c);
    job.epsilon = Some(epsilon);
    let rec = reconstruct(&job)?;
    let f = fidelity(&rec.rho, &target)?;
    Ok(Output::Record(json!({
        "d": a.d,
        "ops": ops.len(),
        "shots": a.shots,
        "seed": a.seed,
        "method": method,
        "epsilon": if method == Method::Cs { Some(epsilon) } else { None },
        "target": "psi_plus",
        "fidelity": f,
        "raw_trace": rec.raw_trace,
        "certificate": rec.certificate,
        "rho": MatrixJson::from(rec.rho),
    })))
}

/// Mean probability of matching outcomes over the settings shared by both parties.
fn table_fidelity(t: &CorrelationTable) -> Result<f64> {
    let (m_a, m_b) = t.settings();
    let m = m_a.min(m_b);
    if m == 0 {
        return Err(CliError::Usage("table has no settings".into()).into());
    }
    let total: f64 = (0..m)
        .map(|x| (0..t.d()).map(|a| t.p(a, a, x, x)).sum::<f64>())
        .sum();
    Ok(total / m as f64)
}

pub fn qkd(a: &QkdArgs) -> Result<Output> {
    let f = match (&a.fidelity, &a.from_table) {
        (Some(f), None) => *f,
        (None, Some(path)) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let t: CorrelationTable = serde_json::from_str(&text)
                .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            if t.d() != a.d {
                return Err(CliError::Usage(format!("table has d = {}, expected {}", t.d(), a.d)).into());
            }
            table_fidelity(&t)?
        }
        _ => return Err(CliError::Usage("give exactly one of --fidelity and --from-table".into()).into()),
    };
    let attack = match a.attack {
        AttackArg::Individual => Attack::Individual,
        AttackArg::Coherent => Attack::Coherent,
    };
    let r = key_rate(f, a.d, attack)?;
    let mut v = serde_json::to_value(r)?;
    insert(&mut v, json!({"qber_threshold_percent": qber_threshold(a.d, attack)?}));
    Ok(Output::Record(v))
}

pub fn compile(a: &CompileArgs) -> Result<Output> {
    let text = fs::read_to_string(&a.state).with_context(|| format!("reading {}", a.state.display()))?;
    let j: MatrixJson = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", a.state.display())))?;
    let psi = PureState::try_from(j)?;
    let padded = psi.dim().max(2).next_power_of_two();
    let placement = match a.placement {
        Placement::Bottom => PsPlacement::Bottom,
        Placement::Top => PsPlacement::Top,
    };
    let settings = triangular_phases_with(&psi, placement, a.k0.unwrap_or(padded / 2))?;
    Ok(Output::Record(serde_json::to_value(settings)?))
}
