//! Boolean nonlinearity: distance from a truth table to the nearest affine
//! function, computed from the Walsh-Hadamard spectrum.

use alloc::vec::Vec;

pub const MAX_VARS: u32 = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NonlinearityError {
    #[error("truth table length {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("{0} variables exceed the limit of {MAX_VARS}")]
    TooManyVariables(u32),
}

/// In-place fast Walsh-Hadamard transform (unnormalised).
pub fn fwht(values: &mut [i64]) {
    let n = values.len();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(h * 2) {
            for i in block..block + h {
                let (a, b) = (values[i], values[i + h]);
                values[i] = a + b;
                values[i + h] = a - b;
            }
        }
        h *= 2;
    }
}

fn variables(len: usize) -> Result<u32, NonlinearityError> {
    if len == 0 || !len.is_power_of_two() {
        return Err(NonlinearityError::NotPowerOfTwo(len));
    }
    let n = len.trailing_zeros();
    if n > MAX_VARS {
        return Err(NonlinearityError::TooManyVariables(n));
    }
    Ok(n)
}

/// Walsh spectrum of the signed form `(-1)^f(x)`.
pub fn walsh_spectrum(table: &[bool]) -> Result<Vec<i64>, NonlinearityError> {
    variables(table.len())?;
    let mut signed: Vec<i64> = table.iter().map(|&b| if b { -1 } else { 1 }).collect();
    fwht(&mut signed);
    Ok(signed)
}

/// `2^(n-1) - max|W_f| / 2`.
pub fn nonlinearity(table: &[bool]) -> Result<u32, NonlinearityError> {
    let spectrum = walsh_spectrum(table)?;
    let peak = spectrum.iter().map(|w| w.unsigned_abs()).max().unwrap_or(0);
    Ok(((table.len() as u64 - peak) / 2) as u32)
}

pub fn hamming_distance(a: &[bool], b: &[bool]) -> u32 {
    a.iter().zip(b).filter(|(x, y)| x != y).count() as u32
}

/// Distance to `b` or to its complement, whichever is smaller.
pub fn distance_up_to_complement(a: &[bool], b: &[bool]) -> u32 {
    let d = hamming_distance(a, b);
    d.min(a.len() as u32 - d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn table(n: u32, f: impl Fn(usize) -> bool) -> Vec<bool> {
        (0..1usize << n).map(f).collect()
    }

    // Frozen from the brute-force affine oracle in tests/nonlinearity_oracle.rs.
    #[test]
    fn known_three_variable_values() {
        let bit = |i: usize, k: u32| (i >> k) & 1 == 1;
        assert_eq!(
            nonlinearity(&table(3, |i| bit(i, 0) ^ bit(i, 1) ^ bit(i, 2))).unwrap(),
            0
        );
        assert_eq!(nonlinearity(&table(3, |_| false)).unwrap(), 0);
        assert_eq!(nonlinearity(&table(3, |i| i == 7)).unwrap(), 1);
        assert_eq!(nonlinearity(&table(3, |i| i.count_ones() >= 2)).unwrap(), 2);
    }

    #[test]
    fn rejects_bad_lengths() {
        assert_eq!(
            nonlinearity(&[true; 3]),
            Err(NonlinearityError::NotPowerOfTwo(3))
        );
        assert_eq!(nonlinearity(&[]), Err(NonlinearityError::NotPowerOfTwo(0)));
    }

    #[test]
    fn complement_distance() {
        let a = vec![true, false, false, false];
        let b = vec![false, true, true, true];
        assert_eq!(hamming_distance(&a, &b), 4);
        assert_eq!(distance_up_to_complement(&a, &b), 0);
    }
}
