//! 3x5 bitmap glyphs for overlay labels. Lowercase maps to uppercase;
//! anything unknown draws as `?`.

pub(crate) const GLYPH_W: u32 = 3;
pub(crate) const GLYPH_H: u32 = 5;

#[rustfmt::skip]
const GLYPHS: &[(char, [&str; 5])] = &[
    ('A', ["010", "101", "111", "101", "101"]),
    ('B', ["110", "101", "110", "101", "110"]),
    ('C', ["011", "100", "100", "100", "011"]),
    ('D', ["110", "101", "101", "101", "110"]),
    ('E', ["111", "100", "110", "100", "111"]),
    ('F', ["111", "100", "110", "100", "100"]),
    ('G', ["011", "100", "101", "101", "011"]),
    ('H', ["101", "101", "111", "101", "101"]),
    ('I', ["111", "010", "010", "010", "111"]),
    ('J', ["001", "001", "001", "101", "010"]),
    ('K', ["101", "101", "110", "101", "101"]),
    ('L', ["100", "100", "100", "100", "111"]),
    ('M', ["101", "111", "111", "101", "101"]),
    ('N', ["110", "101", "101", "101", "101"]),
    ('O', ["010", "101", "101", "101", "010"]),
    ('P', ["110", "101", "110", "100", "100"]),
    ('Q', ["010", "101", "101", "110", "011"]),
    ('R', ["110", "101", "110", "101", "101"]),
    ('S', ["011", "100", "010", "001", "110"]),
    ('T', ["111", "010", "010", "010", "010"]),
    ('U', ["101", "101", "101", "101", "111"]),
    ('V', ["101", "101", "101", "101", "010"]),
    ('W', ["101", "101", "111", "111", "101"]),
    ('X', ["101", "101", "010", "101", "101"]),
    ('Y', ["101", "101", "010", "010", "010"]),
    ('Z', ["111", "001", "010", "100", "111"]),
    ('0', ["111", "101", "101", "101", "111"]),
    ('1', ["010", "110", "010", "010", "111"]),
    ('2', ["110", "001", "010", "100", "111"]),
    ('3', ["110", "001", "010", "001", "110"]),
    ('4', ["101", "101", "111", "001", "001"]),
    ('5', ["111", "100", "110", "001", "110"]),
    ('6', ["011", "100", "111", "101", "111"]),
    ('7', ["111", "001", "010", "010", "010"]),
    ('8', ["111", "101", "111", "101", "111"]),
    ('9', ["111", "101", "111", "001", "110"]),
    ('_', ["000", "000", "000", "000", "111"]),
    ('-', ["000", "000", "111", "000", "000"]),
    ('.', ["000", "000", "000", "000", "010"]),
    ('?', ["111", "001", "010", "000", "010"]),
];

/// Lit cells of `c` as `(column, row)` pairs.
pub(crate) fn glyph_cells(c: char) -> impl Iterator<Item = (u32, u32)> {
    let upper = c.to_ascii_uppercase();
    let rows = GLYPHS
        .iter()
        .find(|(g, _)| *g == upper)
        .or_else(|| GLYPHS.iter().find(|(g, _)| *g == '?'))
        .map(|(_, rows)| rows)
        .expect("fallback glyph exists");
    rows.iter().enumerate().flat_map(|(row, bits)| {
        bits.bytes()
            .enumerate()
            .filter(|(_, b)| *b == b'1')
            .map(move |(col, _)| (col as u32, row as u32))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn glyph_table_is_well_formed() {
        for (c, rows) in GLYPHS {
            assert!(rows.iter().all(|r| r.len() == GLYPH_W as usize), "{c}");
        }
    }

    #[test]
    fn unknown_falls_back() {
        let q: Vec<_> = glyph_cells('?').collect();
        assert_eq!(glyph_cells('#').collect::<Vec<_>>(), q);
        assert_eq!(glyph_cells('a').collect::<Vec<_>>(), glyph_cells('A').collect::<Vec<_>>());
    }
}
