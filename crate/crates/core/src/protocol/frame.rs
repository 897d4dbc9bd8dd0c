//! Length-prefixed JSON framing.
//!
//! ```text
//! +---------------------------+------------------------------+
//! | length: u32 big-endian    | body: UTF-8 JSON object      |
//! +---------------------------+------------------------------+
//! ```

use std::io::{Read, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest accepted body, in bytes.
pub const MAX_FRAME_LEN: usize = 1 << 26;

/// Serializes `msg` and prepends its big-endian byte length.
pub fn encode_frame<T: Serialize>(msg: &T) -> Result<Vec<u8>> {
    let body = serde_json::to_vec(msg)?;
    frame_body(body)
}

pub(crate) fn frame_body(body: Vec<u8>) -> Result<Vec<u8>> {
    if body.len() > MAX_FRAME_LEN {
        return Err(Error::Oversize {
            len: body.len(),
            max: MAX_FRAME_LEN,
        });
    }
    let mut out = Vec::with_capacity(body.len() + 4);
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(&body);
    Ok(out)
}

/// Decodes a complete frame (prefix plus body).
pub fn decode_frame<T: DeserializeOwned>(frame: &[u8]) -> Result<T> {
    if frame.len() < 4 {
        return Err(Error::Frame(format!("{} bytes is shorter than the prefix", frame.len())));
    }
    let len = u32::from_be_bytes([frame[0], frame[1], frame[2], frame[3]]) as usize;
    if len > MAX_FRAME_LEN {
        return Err(Error::Oversize {
            len,
            max: MAX_FRAME_LEN,
        });
    }
    let body = &frame[4..];
    if body.len() != len {
        return Err(Error::Frame(format!(
            "prefix says {len} bytes, body has {}",
            body.len()
        )));
    }
    decode_body(body)
}

/// Parses a frame body, which must be a single JSON object.
pub fn decode_body<T: DeserializeOwned>(body: &[u8]) -> Result<T> {
    let first = body.iter().find(|b| !b.is_ascii_whitespace());
    if first != Some(&b'{') {
        return Err(Error::Frame("body is not a JSON object".into()));
    }
    Ok(serde_json::from_slice(body)?)
}

/// Writes one frame around an already-serialized body.
pub fn write_frame<W: Write>(w: &mut W, body: &[u8]) -> Result<()> {
    if body.len() > MAX_FRAME_LEN {
        return Err(Error::Oversize {
            len: body.len(),
            max: MAX_FRAME_LEN,
        });
    }
    w.write_all(&(body.len() as u32).to_be_bytes())?;
    w.write_all(body)?;
    w.flush()?;
    Ok(())
}

/// Reads one frame body. Returns `Ok(None)` on a clean end of stream.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<Vec<u8>>> {
    let mut prefix = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        match r.read(&mut prefix[filled..])? {
            0 if filled == 0 => return Ok(None),
            0 => return Err(Error::Frame("stream closed inside a length prefix".into())),
            n => filled += n,
        }
    }
    let len = u32::from_be_bytes(prefix) as usize;
    if len > MAX_FRAME_LEN {
        return Err(Error::Oversize {
            len,
            max: MAX_FRAME_LEN,
        });
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body)?;
    Ok(Some(body))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::{json, Value};

    #[test]
    fn prefix_is_big_endian_body_length() {
        let frame = encode_frame(&json!({"a": 1})).unwrap();
        let len = u32::from_be_bytes(frame[..4].try_into().unwrap()) as usize;
        assert_eq!(len, frame.len() - 4);
        assert_eq!(&frame[4..], br#"{"a":1}"#);
    }

    #[test]
    fn rejects_truncated_and_non_object_frames() {
        let mut frame = encode_frame(&json!({"a": 1})).unwrap();
        frame.pop();
        assert!(matches!(decode_frame::<Value>(&frame), Err(Error::Frame(_))));
        let arr = frame_body(b"[1,2]".to_vec()).unwrap();
        assert!(matches!(decode_frame::<Value>(&arr), Err(Error::Frame(_))));
    }

    #[test]
    fn stream_roundtrip() {
        let mut wire = Vec::new();
        write_frame(&mut wire, br#"{"x":true}"#).unwrap();
        write_frame(&mut wire, b"{}").unwrap();
        let mut cursor = std::io::Cursor::new(wire);
        assert_eq!(read_frame(&mut cursor).unwrap().unwrap(), br#"{"x":true}"#);
        assert_eq!(read_frame(&mut cursor).unwrap().unwrap(), b"{}");
        assert!(read_frame(&mut cursor).unwrap().is_none());
    }
}
