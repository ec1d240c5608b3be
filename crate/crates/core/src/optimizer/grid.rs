use crate::error::{Error, Result};

/// Default cap on enumerated grid points.
pub const DEFAULT_EVALUATION_CAP: u64 = 100_000_000;

/// Number of compositions of `resolution` into `dim` parts, `C(resolution+dim-1, dim-1)`.
/// Saturates at `u128::MAX`.
pub fn grid_count(dim: usize, resolution: u32) -> u128 {
    if dim == 0 {
        return 0;
    }
    let n = resolution as u128 + dim as u128 - 1;
    let k = (dim as u128 - 1).min(resolution as u128);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All compositions of `resolution` into `dim` nonnegative parts, in
/// ascending lexicographic order.
pub fn compositions(dim: usize, resolution: u32, cap: u64) -> Result<Vec<Vec<u32>>> {
    if dim == 0 {
        return Err(Error::domain("simplex dimension must be at least 1"));
    }
    let count = grid_count(dim, resolution);
    if count > cap as u128 {
        return Err(Error::resource("simplex grid", count, cap as u128));
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut cur = vec![0u32; dim];
    fill(&mut cur, 0, resolution, &mut out);
    Ok(out)
}

fn fill(cur: &mut [u32], pos: usize, left: u32, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.to_vec());
        return;
    }
    for c in 0..=left {
        cur[pos] = c;
        fill(cur, pos + 1, left - c, out);
    }
}

/// The simplex grid with step `1/resolution`, as probability vectors.
pub fn simplex_grid(dim: usize, resolution: u32) -> Result<Vec<Vec<f64>>> {
    if resolution == 0 {
        return Err(Error::domain("grid resolution must be positive"));
    }
    let r = resolution as f64;
    Ok(compositions(dim, resolution, DEFAULT_EVALUATION_CAP)?
        .into_iter()
        .map(|c| c.into_iter().map(|k| k as f64 / r).collect())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_grids() {
        assert_eq!(simplex_grid(1, 5).unwrap(), vec![vec![1.0]]);
        assert_eq!(
            simplex_grid(2, 2).unwrap(),
            vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0]]
        );
        assert_eq!(simplex_grid(3, 4).unwrap().len(), 15);
    }

    #[test]
    fn counts() {
        assert_eq!(grid_count(3, 4), 15);
        assert_eq!(grid_count(8, 8), 6435);
        assert_eq!(grid_count(1, 1000), 1);
        assert_eq!(grid_count(2, 256), 257);
    }

    #[test]
    fn cap_is_enforced() {
        match compositions(10, 64, 1000) {
            Err(Error::Resource { required, cap, .. }) => {
                assert_eq!(cap, 1000);
                assert_eq!(required, grid_count(10, 64));
            }
            other => panic!("expected resource error, got {other:?}"),
        }
    }

    #[test]
    fn lexicographic_order() {
        let g = compositions(3, 3, 100).unwrap();
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g.iter().all(|c| c.iter().sum::<u32>() == 3));
    }
}
