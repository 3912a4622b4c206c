/// Normalize region text.
///
/// Each line is trimmed and its internal whitespace runs collapse to one
/// space. Line breaks are kept; blank lines at either end are removed.
/// Any Unicode whitespace other than `\n` counts as collapsible, so `\r`
/// and non-breaking spaces disappear too.
pub fn normalize_text(raw: &str) -> String {
    let lines: Vec<String> = raw
        .split('\n')
        .map(|line| line.split_whitespace().collect::<Vec<_>>().join(" "))
        .collect();

    let first = lines.iter().position(|l| !l.is_empty());
    let last = lines.iter().rposition(|l| !l.is_empty());
    match (first, last) {
        (Some(a), Some(b)) => lines[a..=b].join("\n"),
        _ => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn collapses_spaces() {
        assert_eq!(normalize_text("  hello   world "), "hello world");
        assert_eq!(normalize_text("a\t\tb"), "a b");
    }

    #[test]
    fn empty_stays_empty() {
        assert_eq!(normalize_text(""), "");
        assert_eq!(normalize_text(" \t \n  \n"), "");
    }

    #[test]
    fn newlines_are_line_breaks() {
        assert_eq!(normalize_text("a\n  b"), "a\nb");
        assert_eq!(normalize_text("\n\na \n\n b\n"), "a\n\nb");
        assert_eq!(normalize_text("a\r\nb"), "a\nb");
    }

    #[test]
    fn nbsp_collapses() {
        assert_eq!(normalize_text("a\u{a0}\u{a0}b"), "a b");
    }

    proptest! {
        #[test]
        fn idempotent(s in "[ a-c\t\n\u{a0}]{0,40}") {
            let once = normalize_text(&s);
            prop_assert_eq!(normalize_text(&once), once.clone());
            prop_assert_eq!(once.trim(), once.as_str());
            prop_assert!(!once.contains("  "));
        }
    }
}
