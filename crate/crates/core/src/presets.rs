//! Named channel families used by the command line and the check suites.

use crate::channel::{bsc, make_gilbert_elliot, make_memoryless, CompoundFamily, GilbertElliotParams};
use crate::error::{Error, Result};

pub const PRESET_NAMES: [&str; 5] = ["example1", "bsc-pair", "ge-gap", "zero-capacity", "noiseless"];

/// `{BSC(0.1), BSC(0.2)}`.
pub fn bsc_pair() -> CompoundFamily {
    CompoundFamily::new(vec![bsc(0.1).unwrap(), bsc(0.2).unwrap()], vec!["bsc0.1".into(), "bsc0.2".into()])
        .expect("static family")
}

/// Gilbert-Elliot members `θ = 1..=depth` with `g = b = 2^-θ`, `pG = 0`, `pB = 1/2`.
pub fn example1_family(depth: u32) -> Result<CompoundFamily> {
    if depth == 0 || depth > 62 {
        return Err(Error::InvalidArgument("truncation depth must be in 1..=62".into()));
    }
    let members = (1..=depth).map(|t| make_gilbert_elliot(GilbertElliotParams::example1(t))).collect::<Result<Vec<_>>>()?;
    CompoundFamily::new(members, (1..=depth).map(|t| format!("theta{t}")).collect())
}

/// Three Gilbert-Elliot channels with different burstiness.
pub fn ge_gap_family() -> CompoundFamily {
    let params = [
        ("ge-slow", GilbertElliotParams::new(0.1, 0.3, 0.01, 0.3)),
        ("ge-even", GilbertElliotParams::new(0.2, 0.2, 0.05, 0.25)),
        ("ge-fast", GilbertElliotParams::new(0.4, 0.1, 0.0, 0.2)),
    ];
    CompoundFamily::new(
        params.iter().map(|(_, p)| make_gilbert_elliot(*p).unwrap()).collect(),
        params.iter().map(|(l, _)| l.to_string()).collect(),
    )
    .expect("static family")
}

/// `{BSC(0.5), BSC(0.4)}`: the first member has zero capacity.
pub fn zero_capacity_family() -> CompoundFamily {
    CompoundFamily::new(vec![bsc(0.5).unwrap(), bsc(0.4).unwrap()], vec!["bsc0.5".into(), "bsc0.4".into()])
        .expect("static family")
}

/// The binary identity channel.
pub fn noiseless() -> CompoundFamily {
    CompoundFamily::single(make_memoryless(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap(), "noiseless")
}

/// Looks up a preset; `depth` is the Example-1 truncation.
pub fn preset(name: &str, depth: u32) -> Result<CompoundFamily> {
    match name {
        "example1" => example1_family(depth),
        "bsc-pair" => Ok(bsc_pair()),
        "ge-gap" => Ok(ge_gap_family()),
        "zero-capacity" => Ok(zero_capacity_family()),
        "noiseless" => Ok(noiseless()),
        other => Err(Error::InvalidArgument(format!("unknown preset {other}; known: {}", PRESET_NAMES.join(", ")))),
    }
}
