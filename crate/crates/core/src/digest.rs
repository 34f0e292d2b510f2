//! Stable provenance digests for configuration text.

use sha2::{Digest, Sha256};

/// Normalizes line endings, strips `#` comments and blank lines, trims
/// whitespace, then hashes. Returns the first 16 hex digits of SHA-256.
pub fn config_digest(text: &str) -> String {
    let mut normalized = String::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        normalized.push_str(line);
        normalized.push('\n');
    }
    let hash = Sha256::digest(normalized.as_bytes());
    hash.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ignores_comments_and_whitespace() {
        let a = config_digest("a = 1\n# note\n\n  b = 2  \r\n");
        let b = config_digest("a = 1\nb = 2\n");
        assert_eq!(a, b);
        assert_eq!(a.len(), 16);
        assert_ne!(a, config_digest("a = 1\nb = 3\n"));
    }
}
