//! Cantor pairing with `⟨0,0⟩ = 0`.

pub fn pair(x: usize, y: usize) -> usize {
    (x + y) * (x + y + 1) / 2 + y
}

pub fn unpair(z: usize) -> (usize, usize) {
    let mut w = ((((8 * z + 1) as f64).sqrt() - 1.0) / 2.0) as usize;
    while w * (w + 1) / 2 > z {
        w -= 1;
    }
    while (w + 1) * (w + 2) / 2 <= z {
        w += 1;
    }
    let y = z - w * (w + 1) / 2;
    (w - y, y)
}

pub fn triple(x: usize, y: usize, z: usize) -> usize {
    pair(x, pair(y, z))
}

pub fn untriple(n: usize) -> (usize, usize, usize) {
    let (x, yz) = unpair(n);
    let (y, z) = unpair(yz);
    (x, y, z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        assert_eq!(pair(0, 0), 0);
        for z in 0..5000 {
            let (x, y) = unpair(z);
            assert_eq!(pair(x, y), z);
        }
        assert_eq!(untriple(triple(3, 1, 0)), (3, 1, 0));
    }
}
