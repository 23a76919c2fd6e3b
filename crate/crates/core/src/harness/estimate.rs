//! The `estimate` subcommand: geometry estimators serialized as CSV rows
//! `(estimator, params, value, n_samples, seed)`.

use crate::error::{Error, Result};
use crate::geometry::{
    gaussian_width_estimate, min_conic_singular_value_estimate, small_ball_estimates,
    DescentConeSampler, SphereSampler,
};
use crate::kv::KvDoc;
use crate::mat::{DenseMatrix, ScalarField};
use crate::rng::{label, Stream};
use crate::util::fnv1a;

use super::csvio::{fmt_f64, CsvTable};

/// Runs one estimator described by a flat config:
///
/// ```text
/// estimator = "gaussian_width_sphere" | "gaussian_width_cone" |
///             "min_conic" | "small_ball" | "operator_norm"
/// ```
/// plus the keys the chosen estimator consumes (`n`, `r`, `m`, `xi`,
/// `n_samples`, `seed`, `ensemble`, ...).
pub fn run_estimate(doc: &KvDoc, threads: usize) -> Result<CsvTable> {
    let _ = threads;
    let estimator = doc
        .get_str("estimator")?
        .ok_or_else(|| Error::Config("missing `estimator`".into()))?
        .to_string();
    let seed = doc.get_u64("seed")?.unwrap_or(0);
    let n_samples = doc.get_usize("n_samples")?.unwrap_or(1000);
    let mut rng = Stream::new(seed).child(label::GEOMETRY);

    let need = |key: &str| -> Result<usize> {
        doc.get_usize(key)?.ok_or_else(|| Error::Config(format!("estimator needs `{key}`")))
    };

    let mut params: Vec<(String, String)> = Vec::new();
    let value: f64;
    let mut extra_rows: Vec<(String, f64)> = Vec::new();

    match estimator.as_str() {
        "gaussian_width_sphere" => {
            let n = need("n")?;
            params.push(("n".into(), n.to_string()));
            let sampler = SphereSampler { n1: n, n2: n };
            value = gaussian_width_estimate(&sampler, n_samples, 1, &mut rng)?;
        }
        "gaussian_width_cone" => {
            let n = need("n")?;
            let r = doc.get_usize("r")?.unwrap_or(1);
            params.push(("n".into(), n.to_string()));
            params.push(("r".into(), r.to_string()));
            let sampler = DescentConeSampler::union_over_anchors(n, n, r, ScalarField::Real);
            value = gaussian_width_estimate(&sampler, n_samples, 8, &mut rng)?;
        }
        "min_conic" => {
            let op = super::ensemble_from_doc(doc)?;
            let (n1, n2) = op.input_shape();
            let r = doc.get_usize("r")?.unwrap_or(1);
            params.push(("n1".into(), n1.to_string()));
            params.push(("n2".into(), n2.to_string()));
            params.push(("m".into(), op.n_measurements().to_string()));
            params.push(("r".into(), r.to_string()));
            let u = crate::linalg::haar_isometry(n1, r, ScalarField::Real, &mut rng);
            let v = crate::linalg::haar_isometry(n2, r, ScalarField::Real, &mut rng);
            let anchor = crate::geometry::SvdFactors::new(u, vec![1.0; r], v)?;
            value = min_conic_singular_value_estimate(&op, &anchor, n_samples, &mut rng)?;
        }
        "small_ball" => {
            let n = need("n")?;
            let m = need("m")?;
            let xi = doc.get_f64("xi")?.unwrap_or(0.5);
            params.push(("n".into(), n.to_string()));
            params.push(("m".into(), m.to_string()));
            params.push(("xi".into(), fmt_f64(xi)));
            let lift = move |rng: &mut Stream| {
                let a: Vec<crate::mat::C64> = (0..n).map(|_| rng.complex_normal()).collect();
                DenseMatrix::outer(&a, &a)
            };
            let sampler = DescentConeSampler::union_over_anchors(n, n, 1, ScalarField::Complex);
            let est = small_ball_estimates(&lift, &sampler, xi, m, n_samples, &mut rng)?;
            value = est.q_xi;
            extra_rows.push(("small_ball_w_m".into(), est.w_m));
        }
        "operator_norm" => {
            let op = super::ensemble_from_doc(doc)?;
            params.push(("m".into(), op.n_measurements().to_string()));
            let est = op.operator_norm(1e-8, 20_000)?;
            value = est.value;
        }
        other => return Err(Error::Config(format!("unknown estimator `{other}`"))),
    }

    let params_text =
        params.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";");
    let mut table = CsvTable::new(&["estimator", "params", "value", "n_samples", "seed"]);
    table.meta("lrlab_version", env!("CARGO_PKG_VERSION"));
    table.meta("config_hash", format!("{:016x}", fnv1a(doc.to_text().as_bytes())));
    table.meta("note", "sampled one-sided surrogates: widths are lower estimates, conic values upper estimates");
    table.push(vec![
        estimator,
        params_text.clone(),
        fmt_f64(value),
        n_samples.to_string(),
        seed.to_string(),
    ]);
    for (name, v) in extra_rows {
        table.push(vec![name, params_text.clone(), fmt_f64(v), n_samples.to_string(), seed.to_string()]);
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_width_runs() {
        let doc = KvDoc::parse("estimator = \"gaussian_width_sphere\"\nn = 4\nn_samples = 50\n").unwrap();
        let t = run_estimate(&doc, 1).unwrap();
        assert_eq!(t.rows.len(), 1);
        let v: f64 = t.rows[0][2].parse().unwrap();
        assert!(v > 2.0 && v < 6.0, "width {v}");
    }

    #[test]
    fn unknown_estimator_rejected() {
        let doc = KvDoc::parse("estimator = \"nope\"\n").unwrap();
        assert!(run_estimate(&doc, 1).is_err());
    }
}
