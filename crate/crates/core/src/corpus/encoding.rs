use encoding_rs::{DecoderResult, EncoderResult, GB18030, GBK};
use serde::{Deserialize, Serialize};
use std::fmt;

use super::CorpusError;

/// Character encodings used by the engines for queries and result pages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Encoding {
    #[serde(alias = "utf-8", alias = "UTF8", alias = "UTF-8")]
    Utf8,
    #[serde(alias = "GB18030")]
    Gb18030,
    #[serde(alias = "GB2312")]
    Gb2312,
}

impl Encoding {
    pub const ALL: [Encoding; 3] = [Encoding::Utf8, Encoding::Gb18030, Encoding::Gb2312];

    pub fn name(self) -> &'static str {
        match self {
            Encoding::Utf8 => "UTF-8",
            Encoding::Gb18030 => "GB18030",
            Encoding::Gb2312 => "GB2312",
        }
    }
}

impl fmt::Display for Encoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Encodes `text` into `encoding`, failing on the first character the
/// target cannot represent.
pub fn transcode(text: &str, encoding: Encoding) -> Result<Vec<u8>, CorpusError> {
    match encoding {
        Encoding::Utf8 => Ok(text.as_bytes().to_vec()),
        Encoding::Gb18030 => encode_strict(text, GB18030, encoding),
        Encoding::Gb2312 => {
            // GB2312 is the EUC-CN subset of GBK: two-byte codes with lead
            // 0xA1..=0xF7 (rows 0xAA..=0xAF unassigned) and trail 0xA1..=0xFE.
            let bytes = encode_strict(text, GBK, encoding)?;
            let mut pos = 0;
            for c in text.chars() {
                if c.is_ascii() {
                    pos += 1;
                    continue;
                }
                let (lead, trail) = (bytes[pos], bytes.get(pos + 1).copied().unwrap_or(0));
                let lead_ok = (0xA1..=0xF7).contains(&lead) && !(0xAA..=0xAF).contains(&lead);
                if !lead_ok || !(0xA1..=0xFE).contains(&trail) {
                    return Err(CorpusError::UnmappableCharacter { ch: c, encoding });
                }
                pos += 2;
            }
            Ok(bytes)
        }
    }
}

fn encode_strict(
    text: &str,
    codec: &'static encoding_rs::Encoding,
    encoding: Encoding,
) -> Result<Vec<u8>, CorpusError> {
    let mut encoder = codec.new_encoder();
    let cap = encoder
        .max_buffer_length_from_utf8_without_replacement(text.len())
        .unwrap_or(text.len() * 4);
    let mut out = Vec::with_capacity(cap);
    let (result, _read) = encoder.encode_from_utf8_to_vec_without_replacement(text, &mut out, true);
    match result {
        EncoderResult::InputEmpty => Ok(out),
        EncoderResult::Unmappable(ch) => Err(CorpusError::UnmappableCharacter { ch, encoding }),
        EncoderResult::OutputFull => unreachable!("output buffer sized from max_buffer_length"),
    }
}

/// Strict decode; the error carries the byte offset of the first malformed sequence.
pub fn decode(bytes: &[u8], encoding: Encoding) -> Result<String, CorpusError> {
    let codec = match encoding {
        Encoding::Utf8 => {
            return std::str::from_utf8(bytes).map(str::to_owned).map_err(|e| {
                CorpusError::UndecodableBytes {
                    offset: e.valid_up_to(),
                }
            });
        }
        Encoding::Gb18030 => GB18030,
        // Pages labelled GB2312 are decoded as GBK, as browsers do.
        Encoding::Gb2312 => GBK,
    };
    let mut decoder = codec.new_decoder_without_bom_handling();
    let cap = decoder
        .max_utf8_buffer_length_without_replacement(bytes.len())
        .unwrap_or(bytes.len() * 3 + 16);
    let mut out = String::with_capacity(cap);
    let (result, read) = decoder.decode_to_string_without_replacement(bytes, &mut out, true);
    match result {
        DecoderResult::InputEmpty => Ok(out),
        DecoderResult::Malformed(bad, after) => Err(CorpusError::UndecodableBytes {
            offset: read - bad as usize - after as usize,
        }),
        DecoderResult::OutputFull => {
            unreachable!("output buffer sized from max_utf8_buffer_length")
        }
    }
}

/// Lossy encode used for rendering pages: unmappable characters become
/// numeric character references.
pub fn encode_lossy(text: &str, encoding: Encoding) -> Vec<u8> {
    match encoding {
        Encoding::Utf8 => text.as_bytes().to_vec(),
        Encoding::Gb18030 => GB18030.encode(text).0.into_owned(),
        Encoding::Gb2312 => GBK.encode(text).0.into_owned(),
    }
}
