//! Oracle checks run by `adasense verify`.

use serde::Serialize;
use serde_json::{json, Value};

use crate::bounds;
use crate::error::SensingError;
use crate::oracles::{
    average_allocation_value, hypergeometric_pmf, kl_cap_check, maxmin_allocation_value,
    truncated_geometric_pmf,
};
use crate::sensing::SupportClass;
use crate::strategies::{build_strategy, StrategyContext};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub inputs: Value,
    pub value: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Verdict {
    fn new(name: &str, inputs: Value, value: f64, reference: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            inputs,
            value,
            reference,
            tolerance,
            pass: (value - reference).abs() <= tolerance,
        }
    }
}

/// Runs every oracle check. Each takes well under a second.
pub fn run_verification() -> Result<Vec<Verdict>, SensingError> {
    let mut out = Vec::new();
    let m = 6.0;
    for n in 2..=8 {
        for s in 1..=3usize.min(n - 1) {
            for (family, class) in [
                ("all_subsets", SupportClass::enumerate_all_subsets(n, s)?),
                ("cyclic_intervals", SupportClass::cyclic_intervals(n, s)?),
            ] {
                let reference = m * s as f64 / class.xi_size() as f64;
                let inputs = json!({"family": family, "n": n, "s": s, "m": m});
                let (v, _) = maxmin_allocation_value(&class, m)?;
                out.push(Verdict::new("maxmin_allocation", inputs.clone(), v, reference, 1e-9));
                let a = average_allocation_value(&class, m)?;
                out.push(Verdict::new("average_allocation", inputs, a, reference, 1e-9));
            }
        }
    }
    let asym = SupportClass::explicit(3, vec![vec![0, 1], vec![0, 2]])?;
    let (v, _) = maxmin_allocation_value(&asym, 3.0)?;
    out.push(Verdict::new(
        "maxmin_allocation_asymmetric",
        json!({"members": [[1, 2], [1, 3]], "m": 3.0}),
        v,
        3.0,
        1e-9,
    ));
    for l in [1usize, 3, 8, 64] {
        let total: f64 = (1..=l).map(|x| truncated_geometric_pmf(l, x)).sum::<Result<f64, _>>()?;
        out.push(Verdict::new("truncated_geometric_total", json!({"l": l}), total, 1.0, 1e-12));
    }
    let (n, s, d) = (100, 10, 20);
    let total: f64 = (0..=10).map(|k| hypergeometric_pmf(n, s, d, k)).sum::<Result<f64, _>>()?;
    out.push(Verdict::new(
        "hypergeometric_total",
        json!({"n": n, "s": s, "draw": d}),
        total,
        1.0,
        1e-12,
    ));
    out.push(Verdict::new(
        "hypergeometric_pmf",
        json!({"n": 4, "s": 2, "draw": 2, "k": 1}),
        hypergeometric_pmf(4, 2, 2, 1)?,
        2.0 / 3.0,
        1e-12,
    ));

    let goldens: [(&str, Result<bounds::BoundSpec, bounds::BoundError>, f64); 4] = [
        ("detection_lower", bounds::detection_lower_bound(10_000, 100, 1e4, 0.05), 0.214_596_602_628_934_7),
        ("estimation_lower", bounds::estimation_lower_bound(1 << 14, 16, 16384.0, 0.05), 3.185_635_177_572_070_8),
        ("estimation_upper", bounds::estimation_upper_bound(1 << 16, 1, 65536.0), 7.810_054_538_175_465_7),
        ("mds_sufficient", bounds::mds_sufficient_magnitude(1 << 16, 256, 65536.0), 0.331_284_832_568_076_8),
    ];
    for (name, b, reference) in goldens {
        let b = b.map_err(|e| SensingError::InvalidParams(e.to_string()))?;
        out.push(Verdict::new(
            &format!("bound_{name}"),
            serde_json::to_value(b.inputs).expect("serializable"),
            b.value,
            reference,
            5e-7 * reference,
        ));
    }

    let class = SupportClass::all_subsets(64, 4)?;
    for id in ["uniform", "sds"] {
        let st = build_strategy(id, &StrategyContext::new(64, 4, 64.0, 1.0))?;
        let r = kl_cap_check(st.as_ref(), &class, 1.0, 64.0, 200, 20, 1)?;
        let slack = r.cap + 3.0 * r.max_se;
        let mut v = Verdict::new(
            "kl_cap",
            json!({"strategy": id, "n": 64, "s": 4, "m": 64.0, "mu": 1.0, "trials": 200, "supports": 20}),
            r.min_empirical_kl,
            r.cap,
            slack - r.cap,
        );
        // one-sided: only an excess over the cap is a failure
        v.pass = r.pass;
        out.push(v);
    }
    Ok(out)
}
