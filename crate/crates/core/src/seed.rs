use sha2::{Digest, Sha256};

/// Child seed for a named sub-stream: the first eight bytes of
/// `sha256(seed_le || label)`, little endian.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(label.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Lowercase hex sha256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_by_label_and_parent() {
        assert_eq!(derive_seed(7, "label"), derive_seed(7, "label"));
        assert_ne!(derive_seed(7, "label"), derive_seed(7, "embed"));
        assert_ne!(derive_seed(7, "label"), derive_seed(8, "label"));
    }

    #[test]
    fn sha256_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
