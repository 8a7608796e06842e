//! Postings file codec.
//!
//! Each entry is `u16` LE token length, the token bytes, a `u32` LE count,
//! then `count` LEB128 varints holding the gaps between ascending ordinals
//! (the first gap is the first ordinal itself).

use std::collections::HashMap;
use std::io::{self, Write};

use crate::{Error, Result};

pub(crate) fn write_postings<'a, W: Write>(
    out: &mut W,
    entries: impl IntoIterator<Item = (&'a str, &'a [u32])>,
) -> io::Result<()> {
    let mut varint = Vec::with_capacity(5);
    for (token, ordinals) in entries {
        let len = u16::try_from(token.len())
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "token longer than 65535 bytes"))?;
        out.write_all(&len.to_le_bytes())?;
        out.write_all(token.as_bytes())?;
        out.write_all(&(ordinals.len() as u32).to_le_bytes())?;
        let mut previous = 0u32;
        for (i, &ordinal) in ordinals.iter().enumerate() {
            let gap = if i == 0 { ordinal } else { ordinal - previous };
            previous = ordinal;
            varint.clear();
            encode_varint(gap, &mut varint);
            out.write_all(&varint)?;
        }
    }
    Ok(())
}

fn encode_varint(mut value: u32, out: &mut Vec<u8>) {
    while value >= 0x80 {
        out.push((value as u8) | 0x80);
        value >>= 7;
    }
    out.push(value as u8);
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .offset
            .checked_add(n)
            .filter(|&end| end <= self.bytes.len())
            .ok_or_else(|| Error::corrupted("postings", format!("truncated at byte {}", self.offset)))?;
        let slice = &self.bytes[self.offset..end];
        self.offset = end;
        Ok(slice)
    }

    fn varint(&mut self) -> Result<u32> {
        let start = self.offset;
        let mut value = 0u64;
        for shift in (0..35).step_by(7) {
            let byte = self.take(1)?[0];
            value |= ((byte & 0x7f) as u64) << shift;
            if byte & 0x80 == 0 {
                return u32::try_from(value)
                    .map_err(|_| Error::corrupted("postings", format!("varint overflow at byte {start}")));
            }
        }
        Err(Error::corrupted("postings", format!("varint too long at byte {start}")))
    }
}

/// Decodes a postings file. Ordinals must be strictly ascending and below `rows`.
pub(crate) fn read_postings(bytes: &[u8], rows: usize) -> Result<HashMap<String, Vec<u32>>> {
    let mut cursor = Cursor { bytes, offset: 0 };
    let mut postings = HashMap::new();
    while cursor.offset < bytes.len() {
        let entry_start = cursor.offset;
        let len = u16::from_le_bytes(cursor.take(2)?.try_into().unwrap()) as usize;
        let token = std::str::from_utf8(cursor.take(len)?)
            .map_err(|e| Error::corrupted("postings", format!("token at byte {entry_start}: {e}")))?
            .to_string();
        let count = u32::from_le_bytes(cursor.take(4)?.try_into().unwrap()) as usize;
        let mut ordinals = Vec::with_capacity(count.min(rows));
        let mut current = 0u64;
        for i in 0..count {
            let gap = cursor.varint()? as u64;
            if i > 0 && gap == 0 {
                return Err(Error::corrupted("postings", format!("repeated ordinal for `{token}`")));
            }
            current += gap;
            if current >= rows as u64 {
                return Err(Error::corrupted(
                    "postings",
                    format!("ordinal {current} for `{token}` exceeds {rows} rows"),
                ));
            }
            ordinals.push(current as u32);
        }
        if postings.insert(token.clone(), ordinals).is_some() {
            return Err(Error::corrupted("postings", format!("token `{token}` appears twice")));
        }
    }
    Ok(postings)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn known_layout() {
        let mut bytes = Vec::new();
        write_postings(&mut bytes, [("ab", &[3u32, 200][..])]).unwrap();
        // len=2, "ab", count=2, gap 3, gap 197 as two varint bytes
        assert_eq!(bytes, [2, 0, b'a', b'b', 2, 0, 0, 0, 3, 0xc5, 0x01]);
        let decoded = read_postings(&bytes, 201).unwrap();
        assert_eq!(decoded["ab"], [3, 200]);
        assert!(read_postings(&bytes, 200).is_err());
        assert!(read_postings(&bytes[..bytes.len() - 1], 201).is_err());
    }

    proptest! {
        #[test]
        fn round_trip(lists in prop::collection::btree_map("[a-z0-9]{1,12}", prop::collection::btree_set(0u32..100_000, 0..50), 0..20)) {
            let entries: Vec<(String, Vec<u32>)> =
                lists.into_iter().map(|(t, s)| (t, s.into_iter().collect())).collect();
            let mut bytes = Vec::new();
            write_postings(&mut bytes, entries.iter().map(|(t, o)| (t.as_str(), o.as_slice()))).unwrap();
            let decoded = read_postings(&bytes, 100_000).unwrap();
            prop_assert_eq!(decoded.len(), entries.len());
            for (t, o) in &entries {
                prop_assert_eq!(&decoded[t], o);
            }
        }
    }
}
