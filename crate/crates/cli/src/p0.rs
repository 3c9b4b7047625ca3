//! Initial-condition mini-language:
//! `all=<v>` with optional `,node:<i>=<v>` overrides, or
//! `uniform-random(<seed>)`.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use transnn::network::ProbabilityState;

pub fn parse_p0(spec: &str, n: usize) -> Result<ProbabilityState, String> {
    let spec = spec.trim();
    if let Some(rest) = spec.strip_prefix("uniform-random(") {
        let seed: u64 = rest
            .strip_suffix(')')
            .ok_or_else(|| "missing closing parenthesis".to_string())?
            .trim()
            .parse()
            .map_err(|e| format!("bad seed: {e}"))?;
        let mut rng = StdRng::seed_from_u64(seed);
        let p = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        return ProbabilityState::new(p).map_err(|e| e.to_string());
    }
    let mut values: Option<Vec<f64>> = None;
    for part in spec.split(',') {
        let part = part.trim();
        if let Some(v) = part.strip_prefix("all=") {
            let v: f64 = v.parse().map_err(|e| format!("bad value in `{part}`: {e}"))?;
            values = Some(vec![v; n]);
        } else if let Some(rest) = part.strip_prefix("node:") {
            let (idx, v) = rest
                .split_once('=')
                .ok_or_else(|| format!("expected node:<i>=<v>, got `{part}`"))?;
            let idx: usize = idx.parse().map_err(|e| format!("bad node index: {e}"))?;
            let v: f64 = v.parse().map_err(|e| format!("bad value: {e}"))?;
            let vs = values
                .as_mut()
                .ok_or_else(|| "node overrides must follow `all=`".to_string())?;
            if idx >= n {
                return Err(format!("node {idx} out of range (n = {n})"));
            }
            vs[idx] = v;
        } else {
            return Err(format!(
                "unrecognized initial-state term `{part}` (use all=, node:i=v, uniform-random(seed))"
            ));
        }
    }
    let values = values.ok_or_else(|| "empty initial-state spec".to_string())?;
    ProbabilityState::new(values).map_err(|e| e.to_string())
}
