use std::fs;

use anyhow::{Context, Result};
use rayon::prelude::*;

use quditlab::nonlocality::{
    cglmp_max_entangled, ideal_table, qutrit_family_max, satwap_classical_bound, satwap_value,
};
use quditlab::qkd::{key_rate, qber_threshold, Attack};
use quditlab::reference::{
    compare_with_reference, load_dataset, ComputedValue, ReferenceDataset, ReferenceRow, ResultSet,
    RowKind,
};
use quditlab::steering::{
    alice_steering_bases, lhs_bound, randomness_from_beta, steered_assemblage, steering_value,
    RandomnessOptions,
};
use quditlab::witness::{scenario_one_strategy, scenario_two_table, witness_best};
use quditlab::maximally_entangled;

use crate::args::{ReproduceArgs, TableId};
use crate::output::Output;
use crate::CliError;

fn need_d(row: &ReferenceRow) -> quditlab::Result<usize> {
    row.d
        .ok_or_else(|| quditlab::Error::InvalidInput(format!("{} row without d", row.quantity)))
}

fn need_param(row: &ReferenceRow) -> quditlab::Result<f64> {
    row.param
        .ok_or_else(|| quditlab::Error::InvalidInput(format!("{} row without param", row.quantity)))
}

/// Ideal value of one reference row, or `None` for rows that are only data.
fn compute(row: &ReferenceRow) -> quditlab::Result<Option<f64>> {
    let v = match row.quantity.as_str() {
        "cglmp_classical" => 2.0,
        "cglmp_max_entangled" => cglmp_max_entangled(need_d(row)?)?,
        "satwap_classical" => satwap_classical_bound(need_d(row)?),
        "satwap_tsirelson" => satwap_value(&ideal_table(need_d(row)?)?)?.value,
        "qutrit_family_max" => qutrit_family_max(need_param(row)?)?.1,
        "optimal_gamma" => qutrit_family_max(need_param(row)?)?.0,
        "witness_scenario_one_ideal" => {
            let s = scenario_one_strategy(need_d(row)?)?;
            s.witness(&s.ideal_table()?)?.dimension_bound
        }
        "witness_scenario_two_ideal" => {
            witness_best(&scenario_two_table(need_d(row)?, 1.0)?)?.dimension_bound
        }
        "steering_lhs_bound" => lhs_bound(need_d(row)?),
        "steering_ideal" => {
            let d = need_d(row)?;
            let a = steered_assemblage(&maximally_entangled(d).density(), &alice_steering_bases(d)?)?;
            steering_value(&a)?.beta
        }
        "randomness_1sdi_ideal" => {
            randomness_from_beta(need_d(row)?, 2.0, None, &RandomnessOptions::default())?
                .min_entropy_bits
        }
        "key_rate_ideal" => key_rate(1.0, need_d(row)?, Attack::Individual)?.r_sk,
        "qber_threshold_individual_percent" => qber_threshold(need_d(row)?, Attack::Individual)?,
        "qber_threshold_coherent_percent" => qber_threshold(need_d(row)?, Attack::Coherent)?,
        _ => return Ok(None),
    };
    Ok(Some(v))
}

fn dataset_id(t: TableId) -> &'static str {
    match t {
        TableId::Table1 => "table1",
        TableId::Steering => "steering",
        TableId::Qkd => "qkd",
        TableId::Witness => "witness",
        TableId::SelfTesting => "self-testing",
        TableId::RandomnessOneSided => "randomness-1sdi",
    }
}

fn num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn find<'a>(ds: &'a ReferenceDataset, quantity: &str, d: usize) -> Option<&'a ReferenceRow> {
    ds.rows.iter().find(|r| r.quantity == quantity && r.d == Some(d))
}

/// One line per d in the layout of the Bell table: classical bound, ideal
/// value and measured value for each inequality.
fn table1_rows(ds: &ReferenceDataset, values: &[ComputedValue]) -> (Vec<String>, Vec<Vec<String>>) {
    let header = [
        "d",
        "cglmp_classical",
        "cglmp_ideal",
        "cglmp_ideal_reference",
        "cglmp_measured",
        "cglmp_measured_error",
        "satwap_classical",
        "satwap_classical_reference",
        "satwap_ideal",
        "satwap_ideal_reference",
        "satwap_measured",
        "satwap_measured_error",
    ]
    .map(String::from)
    .to_vec();
    let computed = |q: &str, d: usize| {
        values
            .iter()
            .find(|v| v.quantity == q && v.d == Some(d))
            .map(|v| v.value)
    };
    let reference = |q: &str, d: usize| find(ds, q, d).map(|r| r.value);
    let error = |q: &str, d: usize| find(ds, q, d).and_then(|r| r.error);
    let mut dims: Vec<usize> = ds.rows.iter().filter_map(|r| r.d).collect();
    dims.dedup();
    let rows = dims
        .into_iter()
        .map(|d| {
            vec![
                d.to_string(),
                num(computed("cglmp_classical", d)),
                num(computed("cglmp_max_entangled", d)),
                num(reference("cglmp_max_entangled", d)),
                num(reference("cglmp_measured", d)),
                num(error("cglmp_measured", d)),
                num(computed("satwap_classical", d)),
                num(reference("satwap_classical", d)),
                num(computed("satwap_tsirelson", d)),
                num(reference("satwap_tsirelson", d)),
                num(reference("satwap_measured", d)),
                num(error("satwap_measured", d)),
            ]
        })
        .collect();
    (header, rows)
}

fn kind_name(k: RowKind) -> &'static str {
    match k {
        RowKind::Ideal => "ideal",
        RowKind::Bound => "bound",
        RowKind::Measured => "measured",
        RowKind::Annotation => "annotation",
    }
}

/// Every dataset row with its computed counterpart where one exists.
fn generic_rows(ds: &ReferenceDataset, values: &[Option<f64>]) -> (Vec<String>, Vec<Vec<String>>) {
    let header = [
        "quantity", "d", "param", "at", "kind", "reference", "error", "computed", "delta",
        "tolerance", "passed",
    ]
    .map(String::from)
    .to_vec();
    let rows = ds
        .rows
        .iter()
        .zip(values)
        .map(|(r, c)| {
            let passed = match (c, r.tolerance, r.kind) {
                (Some(c), Some(t), RowKind::Ideal | RowKind::Bound) => {
                    ((c - r.value).abs() <= t).to_string()
                }
                _ => String::new(),
            };
            vec![
                r.quantity.clone(),
                r.d.map(|d| d.to_string()).unwrap_or_default(),
                num(r.param),
                num(r.at),
                kind_name(r.kind).to_string(),
                r.value.to_string(),
                num(r.error),
                num(*c),
                num(c.map(|c| c - r.value)),
                num(r.tolerance),
                passed,
            ]
        })
        .collect();
    (header, rows)
}

/// Returns the rendered table and whether every gated row passed.
pub fn reproduce(a: &ReproduceArgs) -> Result<(Output, bool)> {
    let id = dataset_id(a.table);
    let ds = load_dataset(id)?;
    let computed: Vec<Option<f64>> = ds
        .rows
        .par_iter()
        .map(compute)
        .collect::<quditlab::Result<_>>()?;
    let values: Vec<ComputedValue> = ds
        .rows
        .iter()
        .zip(&computed)
        .filter_map(|(r, c)| {
            c.map(|value| ComputedValue {
                quantity: r.quantity.clone(),
                d: r.d,
                param: r.param,
                at: r.at,
                value,
            })
        })
        .collect();
    let report = compare_with_reference(
        &ResultSet {
            id: id.into(),
            values: values.clone(),
        },
        &ds,
    )?;
    if let Some(path) = &a.report {
        let mut bytes = serde_json::to_vec_pretty(&report)?;
        bytes.push(b'\n');
        fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    }
    if report.missing > 0 {
        return Err(CliError::Usage(format!("{} gated rows have no recipe", report.missing)).into());
    }
    let (header, rows) = match a.table {
        TableId::Table1 => table1_rows(&ds, &values),
        _ => generic_rows(&ds, &computed),
    };
    Ok((Output::Rows(header, rows), report.passed))
}
