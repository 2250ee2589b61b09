//! Version-1 victim wire protocol: one JSON document per line over the
//! child's stdin/stdout.
//!
//! ```text
//! → {"cmd":"hello","version":1}
//! ← {"ok":true,"version":1,"model":"<name>","max_width":W,"max_height":H}
//! → {"cmd":"estimate","width":W,"height":H,"pixels":[r,g,b,...]}
//! ← {"ok":true,"width":W,"height":H,"depth":[d,...]}
//! ← {"ok":false,"error":"<message>"}
//! ```
//!
//! Both the client and the mock adapter use these types, so the encoding is
//! defined in exactly one place.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::raster::{CapturedImage, DepthMap, RgbImage};

pub const PROTOCOL_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case")]
pub enum Request {
    Hello {
        version: u64,
    },
    Estimate {
        width: usize,
        height: usize,
        /// Row-major RGB triples in [0, 1].
        pixels: Vec<f64>,
    },
}

impl Request {
    pub fn hello() -> Self {
        Request::Hello {
            version: PROTOCOL_VERSION,
        }
    }

    pub fn estimate(image: &CapturedImage) -> Self {
        Request::Estimate {
            width: image.width,
            height: image.height,
            pixels: image.data.clone(),
        }
    }

    /// Decodes the image of an estimate request.
    pub fn into_image(self) -> Result<RgbImage> {
        match self {
            Request::Estimate {
                width,
                height,
                pixels,
            } => RgbImage::new(width, height, pixels),
            Request::Hello { .. } => {
                Err(Error::ContractViolation("not an estimate request".into()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HelloReply {
    pub ok: bool,
    pub version: u64,
    pub model: String,
    pub max_width: usize,
    pub max_height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReply {
    pub ok: bool,
    pub width: usize,
    pub height: usize,
    pub depth: Vec<f64>,
}

impl EstimateReply {
    pub fn from_depth(depth: &DepthMap) -> Self {
        Self {
            ok: true,
            width: depth.width,
            height: depth.height,
            depth: depth.values.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReply {
    pub ok: bool,
    pub error: String,
}

impl ErrorReply {
    pub fn new(message: impl Into<String>) -> Self {
        Self {
            ok: false,
            error: message.into(),
        }
    }
}

pub fn encode_line<T: Serialize>(msg: &T) -> Result<String> {
    let mut line = serde_json::to_string(msg)?;
    line.push('\n');
    Ok(line)
}

/// Parses a reply line, turning `{"ok":false,...}` into a victim failure.
fn parse_reply<T: for<'de> Deserialize<'de>>(line: &str) -> Result<T> {
    let value: Value = serde_json::from_str(line.trim())
        .map_err(|e| Error::victim(format!("unparseable reply: {e}")))?;
    match value.get("ok").and_then(Value::as_bool) {
        Some(true) => {}
        Some(false) => {
            let msg = value
                .get("error")
                .and_then(Value::as_str)
                .unwrap_or("unspecified error");
            return Err(Error::victim(format!("victim reported: {msg}")));
        }
        None => return Err(Error::victim("reply lacks an \"ok\" field")),
    }
    serde_json::from_value(value).map_err(|e| Error::victim(format!("malformed reply: {e}")))
}

/// Validates a hello reply against the supported protocol version.
pub fn parse_hello(line: &str) -> Result<HelloReply> {
    let reply: HelloReply = parse_reply(line)?;
    if reply.version != PROTOCOL_VERSION {
        return Err(Error::UnsupportedProtocol {
            found: reply.version,
            expected: PROTOCOL_VERSION,
        });
    }
    Ok(reply)
}

/// Decodes an estimate reply for a request of size `(width, height)`.
pub fn parse_estimate(line: &str, width: usize, height: usize) -> Result<DepthMap> {
    let reply: EstimateReply = parse_reply(line)?;
    if (reply.width, reply.height) != (width, height) {
        return Err(Error::victim(format!(
            "victim answered {}x{} for a {width}x{height} image",
            reply.width, reply.height
        )));
    }
    DepthMap::new(reply.width, reply.height, reply.depth)
        .map_err(|e| Error::victim(format!("invalid depth map: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn wire_shapes() {
        assert_eq!(
            encode_line(&Request::hello()).unwrap(),
            "{\"cmd\":\"hello\",\"version\":1}\n"
        );
        let img = RgbImage::new(1, 1, vec![0.5, 0.25, 1.0]).unwrap();
        assert_eq!(
            encode_line(&Request::estimate(&img)).unwrap(),
            "{\"cmd\":\"estimate\",\"width\":1,\"height\":1,\"pixels\":[0.5,0.25,1.0]}\n"
        );
        let parsed: Request = serde_json::from_str(r#"{"cmd":"hello","version":1}"#).unwrap();
        assert_eq!(parsed, Request::hello());
    }

    #[test]
    fn hello_versions() {
        let ok = r#"{"ok":true,"version":1,"model":"m","max_width":64,"max_height":48}"#;
        assert_eq!(parse_hello(ok).unwrap().max_height, 48);
        let v2 = r#"{"ok":true,"version":2,"model":"m","max_width":64,"max_height":48}"#;
        assert!(matches!(
            parse_hello(v2),
            Err(Error::UnsupportedProtocol {
                found: 2,
                expected: 1
            })
        ));
    }

    #[test]
    fn failure_replies() {
        assert!(matches!(
            parse_estimate(r#"{"ok":false,"error":"boom"}"#, 1, 1),
            Err(Error::VictimFailure { message, .. }) if message.contains("boom")
        ));
        assert!(parse_estimate("not json", 1, 1)
            .unwrap_err()
            .is_victim_failure());
        assert!(parse_estimate(r#"{"ok":true,"width":2,"height":1,"depth":[1,2]}"#, 1, 1).is_err());
        assert!(parse_estimate(r#"{"ok":true,"width":1,"height":1,"depth":[-1]}"#, 1, 1).is_err());
        assert!(parse_estimate(r#"{"width":1,"height":1,"depth":[1]}"#, 1, 1).is_err());
    }

    proptest! {
        #[test]
        fn image_and_depth_round_trip(
            pixels in proptest::collection::vec(0.0f64..=1.0, 3 * 6),
            depth in proptest::collection::vec(0.0f64..100.0, 6),
        ) {
            let img = RgbImage::new(3, 2, pixels).unwrap();
            let line = encode_line(&Request::estimate(&img)).unwrap();
            let back: Request = serde_json::from_str(line.trim()).unwrap();
            let decoded = back.into_image().unwrap();
            for (a, b) in img.data.iter().zip(&decoded.data) {
                prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-12));
            }

            let d = DepthMap::new(3, 2, depth).unwrap();
            let line = encode_line(&EstimateReply::from_depth(&d)).unwrap();
            let out = parse_estimate(&line, 3, 2).unwrap();
            for (a, b) in d.values.iter().zip(&out.values) {
                prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1e-12));
            }
        }
    }
}
