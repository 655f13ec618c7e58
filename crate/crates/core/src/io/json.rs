use serde_json::{json, Value};

use crate::exterior::ExteriorVector;
use crate::fs::{FailCause, Verdict, Witness};

fn multivector(v: &ExteriorVector) -> Value {
    json!({
        "grade": v.grade(),
        "text": v.to_string(),
        "coords": v.coords().iter().collect::<Vec<_>>(),
    })
}

pub fn witness_json(w: &Witness) -> Value {
    match w {
        Witness::Pair { v, w } => json!({"kind": "pair", "v": multivector(v), "w": multivector(w)}),
        Witness::Quadruple { v, w, v_ext, w_ext } => json!({
            "kind": "quadruple",
            "v": multivector(v),
            "w": multivector(w),
            "v_ext": multivector(v_ext),
            "w_ext": multivector(w_ext),
        }),
    }
}

fn cause_json(c: &FailCause) -> Value {
    match c {
        FailCause::Cardinality { grade, maps, required } => {
            json!({"kind": "cardinality", "grade": grade, "maps": maps, "required": required})
        }
        FailCause::RankDeficient {
            grade,
            rank,
            required,
            v,
            complement,
        } => json!({
            "kind": "rank_deficient",
            "grade": grade,
            "rank": rank,
            "required": required,
            "v": multivector(v),
            "complement": complement.iter().map(multivector).collect::<Vec<_>>(),
        }),
        FailCause::JointPairing { margin } => json!({"kind": "joint_pairing", "margin": margin}),
    }
}

pub fn verdict_json(v: &Verdict) -> Value {
    match v {
        Verdict::CertifiedPass { reason } => json!({"verdict": "CertifiedPass", "reason": reason}),
        Verdict::EmpiricalPass { samples, margin } => {
            json!({"verdict": "EmpiricalPass", "samples": samples, "margin": margin})
        }
        Verdict::Fail(e) => json!({
            "verdict": "Fail",
            "cause": cause_json(&e.cause),
            "witness": e.witness.as_ref().map(witness_json),
        }),
    }
}
