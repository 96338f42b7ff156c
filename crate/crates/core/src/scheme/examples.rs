use crate::error::{Error, Result};
use crate::model::{int, ratio, Multiplicity, SystemConfig};

/// The four small worked configurations: edge-only with `k_r = 4` and
/// `k_r = 8`, fronthaul-only, and the mixed cache-plus-fronthaul case.
pub const WORKED_EXAMPLES: [u8; 4] = [1, 2, 3, 4];

/// Configuration and multiplicity of worked example `n` (1 to 4).
pub fn worked_example(n: u8) -> Result<(SystemConfig, Multiplicity)> {
    let (k_r, mu, r, m) = match n {
        1 => (4, ratio(1, 2), int(0), 2),
        2 => (8, ratio(3, 4), int(0), 3),
        3 => (4, int(0), int(2), 2),
        4 => (4, ratio(1, 4), int(2), 2),
        _ => return Err(Error::InvalidConfig(format!("no worked example {n}; choose 1 to 4"))),
    };
    Ok((SystemConfig::with_defaults(4, k_r, 2, mu, r)?, Multiplicity(m)))
}
