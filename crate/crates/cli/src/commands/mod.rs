//! One module per subcommand.

pub mod delay;
pub mod grid;
pub mod lie;
pub mod place;
pub mod simulate;
pub mod sweep;

use obskit_core::wing::StrainKind;

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn kinds_or_all(kinds: &[StrainKind]) -> Vec<StrainKind> {
    let mut k = if kinds.is_empty() { StrainKind::ALL.to_vec() } else { kinds.to_vec() };
    k.sort();
    k.dedup();
    k
}
