//! Symbols of the pattern alphabet.
//!
//! Values are processed as sequences of `char`. Mask tokens produced by
//! semantic abstraction occupy a block of the Unicode private use area, one
//! codepoint per semantic type, so every mask is a single atomic symbol for
//! the profiler and the edit engine alike.

const MASK_BASE: u32 = 0xE000;
const MASK_LIMIT: u32 = 0xF8FF;

/// The alphabet symbol standing for the semantic type at `index` in the
/// active type list.
pub fn mask_symbol(index: usize) -> char {
    let code = MASK_BASE + index as u32;
    assert!(code <= MASK_LIMIT, "too many semantic types");
    char::from_u32(code).expect("private use codepoint")
}

/// Inverse of [`mask_symbol`].
pub fn mask_index(c: char) -> Option<usize> {
    let code = c as u32;
    (MASK_BASE..=MASK_LIMIT).contains(&code).then(|| (code - MASK_BASE) as usize)
}

pub fn is_mask(c: char) -> bool {
    mask_index(c).is_some()
}

/// Alphanumeric in the sense used by classes, features and ranking. Mask
/// tokens count as alphanumeric content.
pub fn is_alnum(c: char) -> bool {
    c.is_ascii_alphanumeric() || is_mask(c)
}

/// Renders a symbol sequence for humans, spelling masks as `⟦name⟧`.
pub fn render(symbols: &str, type_names: &[String]) -> String {
    let mut out = String::with_capacity(symbols.len());
    for c in symbols.chars() {
        match mask_index(c) {
            Some(i) => {
                out.push('⟦');
                match type_names.get(i) {
                    Some(name) => out.push_str(name),
                    None => out.push_str(&format!("m{}", i + 1)),
                }
                out.push('⟧');
            }
            None => out.push(c),
        }
    }
    out
}
