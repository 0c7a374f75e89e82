use super::{gcd, mod_inverse};
use crate::error::{invalid, Error, Result};

/// Combines `(value, modulus)` pairs into the unique residue modulo the product.
///
/// Returns `(value, product)` with `value` in `[0, product)`.
pub fn crt_combine(residues: &[(u64, u64)]) -> Result<(u64, u64)> {
    if residues.is_empty() {
        return Err(invalid("no residues to combine"));
    }
    for (i, &(_, a)) in residues.iter().enumerate() {
        if a == 0 {
            return Err(invalid("modulus must be positive"));
        }
        for &(_, b) in &residues[i + 1..] {
            if gcd(a, b) != 1 {
                return Err(Error::NotCoprime(a, b));
            }
        }
    }
    let (mut x, mut m) = (0u128, 1u128);
    for &(v, mi) in residues {
        let mi = mi as u128;
        let v = v as u128 % mi;
        // x + m·k ≡ v (mod mi)
        let inv = mod_inverse((m % mi) as i128, mi as u64).expect("coprime moduli") as u128;
        let diff = (v + mi - x % mi) % mi;
        let k = diff * inv % mi;
        x += m * k;
        m = m
            .checked_mul(mi)
            .filter(|&p| p <= u64::MAX as u128)
            .ok_or_else(|| invalid("product of moduli overflows"))?;
    }
    Ok((x as u64, m as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(crt_combine(&[(2, 3), (3, 5)]).unwrap(), (8, 15));
        assert_eq!(crt_combine(&[(0, 3), (0, 5)]).unwrap(), (0, 15));
        assert_eq!(crt_combine(&[(2, 6), (3, 4)]), Err(Error::NotCoprime(6, 4)));
    }

    #[test]
    fn three_moduli_matches_exhaustive_scan() {
        let oracle = (0..60u64)
            .find(|x| x % 3 == 2 && x % 5 == 3 && x % 4 == 1)
            .unwrap();
        assert_eq!(crt_combine(&[(2, 3), (3, 5), (1, 4)]).unwrap(), (oracle, 60));
        assert_eq!(oracle, 53);
    }
}
