//! Helpers for addressing strings by Unicode scalar value offsets.
//!
//! Every offset exposed by this crate counts `char`s, not bytes.

/// Number of Unicode scalar values in `text`.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Byte offset of every char boundary, including the end of the string.
/// `table[i]` is the byte position of char `i`; `table[char_len]` is `text.len()`.
pub fn boundary_table(text: &str) -> Vec<usize> {
    let mut table: Vec<usize> = text.char_indices().map(|(b, _)| b).collect();
    table.push(text.len());
    table
}

/// Substring covering chars `[start, end)`, or `None` when out of range.
pub fn char_slice(text: &str, start: usize, end: usize) -> Option<&str> {
    if start > end {
        return None;
    }
    let table = boundary_table(text);
    if end >= table.len() {
        return None;
    }
    Some(&text[table[start]..table[end]])
}

/// Converts a byte offset that lies on a char boundary into a char offset.
pub(crate) fn byte_to_char(table: &[usize], byte: usize) -> usize {
    table
        .binary_search(&byte)
        .expect("byte offset must lie on a char boundary")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slices_by_chars() {
        let s = "täglich 2x";
        assert_eq!(char_len(s), 10);
        assert_eq!(char_slice(s, 0, 7), Some("täglich"));
        assert_eq!(char_slice(s, 8, 10), Some("2x"));
        assert_eq!(char_slice(s, 8, 11), None);
        assert_eq!(char_slice(s, 3, 2), None);
    }

    #[test]
    fn byte_char_conversion() {
        let s = "äb";
        let table = boundary_table(s);
        assert_eq!(table, vec![0, 2, 3]);
        assert_eq!(byte_to_char(&table, 2), 1);
        assert_eq!(byte_to_char(&table, 3), 2);
    }
}
