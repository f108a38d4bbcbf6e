use bvn_core::hoare::Params;
use bvn_core::ProofScript;
use std::fmt::Write;

fn params(p: &Params) -> Vec<String> {
    let d = Params::default();
    let mut out = Vec::new();
    if let Some(b) = &p.delta {
        out.push(format!("delta = {b}"));
    }
    if let Some(t) = &p.term {
        out.push(format!("term = {t}"));
    }
    if let Some(vs) = &p.vars {
        out.push(format!("vars = {}", vs.join(" ")));
    }
    if p.trials != d.trials {
        out.push(format!("trials = {}", p.trials));
    }
    if p.seed != d.seed {
        out.push(format!("seed = {}", p.seed));
    }
    if p.max_steps != d.max_steps {
        out.push(format!("max_steps = {}", p.max_steps));
    }
    out
}

/// One `step` per line in the `.qpf` syntax.
pub fn proof(p: &ProofScript) -> String {
    let mut s = String::new();
    for st in &p.steps {
        let _ = write!(s, "step {} : {} by {}", st.id, st.judgment, st.rule);
        if !st.premises.is_empty() {
            let _ = write!(s, " from {}", st.premises.join(", "));
        }
        let ps = params(&st.params);
        if !ps.is_empty() {
            let _ = write!(s, " with {}", ps.join(", "));
        }
        s.push('\n');
    }
    s
}
