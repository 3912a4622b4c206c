use std::fmt;

use crate::schema::{Region, RegionKind};
use crate::sha256_hex;

const MIN_LEN: usize = 5;
const MAX_LEN: usize = 50;
const TRUNCATED_LEN: usize = 40;
const DIGEST_SUFFIX_LEN: usize = 10;

/// Presentation object id: 5 to 50 chars, first alphanumeric or `_`, the
/// rest alphanumeric, `_` or `-`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObjectId(String);

impl ObjectId {
    /// Accept `value` only if it already satisfies the id constraints.
    pub fn new(value: impl Into<String>) -> Option<Self> {
        let value = value.into();
        is_valid(&value).then_some(Self(value))
    }

    /// `prefix` + sanitized `raw`, padded or digest-truncated into range.
    pub fn derive(prefix: &str, raw: &str) -> Self {
        let mut id = String::with_capacity(prefix.len() + raw.len());
        id.push_str(prefix);
        id.extend(raw.chars().map(|c| if is_id_char(c) { c } else { '_' }));

        if id.chars().count() > MAX_LEN {
            let digest = sha256_hex(raw.as_bytes());
            // All chars are ASCII after sanitizing, so byte slicing is safe.
            id.truncate(TRUNCATED_LEN);
            id.push_str(&digest[..DIGEST_SUFFIX_LEN]);
        }
        while id.len() < MIN_LEN {
            id.push('_');
        }
        debug_assert!(is_valid(&id), "{id}");
        Self(id)
    }

    pub fn background(page_id: &ObjectId) -> Self {
        Self::derive("BG_", page_id.as_str())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn is_id_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn is_valid(s: &str) -> bool {
    let mut chars = s.chars();
    let Some(first) = chars.next() else {
        return false;
    };
    (MIN_LEN..=MAX_LEN).contains(&s.len())
        && (first.is_ascii_alphanumeric() || first == '_')
        && chars.all(is_id_char)
}

/// `TXT_<id>` for text regions, `IMG_<id>` for image regions.
pub fn object_id_for(region: &Region) -> ObjectId {
    let prefix = match region.kind {
        RegionKind::Text => "TXT_",
        RegionKind::Image => "IMG_",
    };
    ObjectId::derive(prefix, &region.id)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::PixelBox;
    use proptest::prelude::*;

    fn text(id: &str) -> Region {
        Region::text(id, 1, PixelBox::new(0.0, 0.0, 1.0, 1.0), "x")
    }

    #[test]
    fn prefixes_by_kind() {
        assert_eq!(object_id_for(&text("title")).as_str(), "TXT_title");
        let img = Region::image("image_social_proof", 2, PixelBox::new(0.0, 0.0, 1.0, 1.0));
        assert_eq!(object_id_for(&img).as_str(), "IMG_image_social_proof");
        assert_eq!(object_id_for(&text("a")).as_str(), "TXT_a");
    }

    #[test]
    fn sanitizes_and_pads() {
        assert_eq!(object_id_for(&text("hero title!")).as_str(), "TXT_hero_title_");
        assert_eq!(ObjectId::derive("", "ab").as_str(), "ab___");
        assert_eq!(object_id_for(&text("é")).as_str(), "TXT__");
    }

    #[test]
    fn long_ids_truncate_with_digest() {
        let long = "x".repeat(80);
        let id = object_id_for(&text(&long));
        assert_eq!(id.as_str().len(), 50);
        assert!(id.as_str().starts_with("TXT_xxxx"));
        let other = object_id_for(&text(&format!("{long}y")));
        assert_ne!(id, other);
        assert_eq!(&id.as_str()[..40], &other.as_str()[..40]);
    }

    #[test]
    fn validation() {
        assert!(ObjectId::new("I2S_SLIDE").is_some());
        assert!(ObjectId::new("-abcd").is_none());
        assert!(ObjectId::new("abc").is_none());
        assert!(ObjectId::new("a b cd").is_none());
        assert!(ObjectId::new("x".repeat(51)).is_none());
    }

    proptest! {
        #[test]
        fn always_valid_and_deterministic(raw in "\\PC{1,80}") {
            let a = ObjectId::derive("TXT_", &raw);
            prop_assert!(is_valid(a.as_str()));
            prop_assert_eq!(a, ObjectId::derive("TXT_", &raw));
        }
    }
}
