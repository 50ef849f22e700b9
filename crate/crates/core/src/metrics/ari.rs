use crate::error::Result;
use crate::volume::BinaryVolume;

fn pairs(n: u64) -> f64 {
    (n as f64) * (n.saturating_sub(1) as f64) / 2.0
}

/// Adjusted Rand index between the foreground/background partitions of `p`
/// and `g`, from the 2×2 contingency table.
///
/// Returns 1 when the index is undefined (fewer than two voxels, or both
/// partitions consisting of a single class).
pub fn ari(p: &BinaryVolume, g: &BinaryVolume) -> Result<f64> {
    p.check_same_shape(g)?;
    let mut table = [[0u64; 2]; 2];
    for (&a, &b) in p.bits().iter().zip(g.bits()) {
        table[a as usize][b as usize] += 1;
    }
    let n: u64 = table.iter().flatten().sum();
    if n < 2 {
        return Ok(1.0);
    }
    let index: f64 = table.iter().flatten().map(|&c| pairs(c)).sum();
    let rows: f64 = table.iter().map(|r| pairs(r[0] + r[1])).sum();
    let cols: f64 = (0..2).map(|j| pairs(table[0][j] + table[1][j])).sum();
    let expected = rows * cols / pairs(n);
    let max = (rows + cols) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}
