//! File formats: newline-delimited corpus files, JSONL transcripts and IG
//! traces, and transparent gzip decoding for large inputs.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::PersistError;
use crate::model::{IgRecord, ObjectCorpus, Transcript};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Opens a text file for buffered reading, decompressing it on the fly when
/// it starts with the gzip magic bytes.
pub fn open_text(path: &Path) -> Result<Box<dyn BufRead>, PersistError> {
    let mut file = File::open(path).map_err(|e| PersistError::io(path, e))?;
    let mut magic = [0u8; 2];
    let n = read_prefix(&mut file, &mut magic).map_err(|e| PersistError::io(path, e))?;
    let file = File::open(path).map_err(|e| PersistError::io(path, e))?;
    if n == 2 && magic == [0x1f, 0x8b] {
        Ok(Box::new(BufReader::new(GzDecoder::new(file))))
    } else {
        Ok(Box::new(BufReader::new(file)))
    }
}

fn read_prefix(file: &mut File, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match file.read(&mut buf[filled..])? {
            0 => break,
            n => filled += n,
        }
    }
    Ok(filled)
}

/// Reads a newline-delimited object list.
pub fn load_corpus(path: &Path) -> Result<ObjectCorpus, PersistError> {
    let text = std::fs::read_to_string(path).map_err(|e| PersistError::io(path, e))?;
    Ok(ObjectCorpus::from_names(text.lines())?)
}

pub fn write_jsonl<T: Serialize>(items: &[T], writer: impl Write) -> std::io::Result<()> {
    let mut writer = BufWriter::new(writer);
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn write_jsonl_file<T: Serialize>(items: &[T], path: &Path) -> Result<(), PersistError> {
    let file = File::create(path).map_err(|e| PersistError::io(path, e))?;
    write_jsonl(items, file).map_err(|e| PersistError::io(path, e))
}

/// Parses JSONL, skipping blank lines. Errors carry 1-based line numbers.
pub fn read_jsonl<T: DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, PersistError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| PersistError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| PersistError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_transcripts(transcripts: &[Transcript], path: &Path) -> Result<(), PersistError> {
    write_jsonl_file(transcripts, path)
}

/// Parses and validates transcripts; the first invalid line aborts the read.
pub fn parse_transcripts(reader: impl BufRead) -> Result<Vec<Transcript>, PersistError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| PersistError::Malformed {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let transcript: Transcript =
            serde_json::from_str(&line).map_err(|e| PersistError::Malformed {
                line: line_no,
                message: e.to_string(),
            })?;
        transcript
            .validate()
            .map_err(|source| PersistError::Rejected {
                line: line_no,
                source,
            })?;
        out.push(transcript);
    }
    Ok(out)
}

pub fn read_transcripts(path: &Path) -> Result<Vec<Transcript>, PersistError> {
    parse_transcripts(open_text(path)?)
}

pub fn write_ig_records(records: &[IgRecord], path: &Path) -> Result<(), PersistError> {
    write_jsonl_file(records, path)
}

pub fn read_ig_records(path: &Path) -> Result<Vec<IgRecord>, PersistError> {
    read_jsonl(open_text(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::*;
    use std::io::Cursor;

    fn three_turn_success() -> Transcript {
        let mk = |t: u32, q: &str, ty, fmt, a: &str, verdict| TurnRecord {
            t,
            question: q.into(),
            q_type: ty,
            q_format: fmt,
            revision_count: 0,
            constraint_violation: None,
            answer: a.into(),
            is_direct_guess: ty == QuestionType::Direct,
            verdict,
        };
        Transcript {
            game_id: "game-0001".into(),
            secret_object: "abacus".into(),
            config: GameConfig::default(),
            turns: vec![
                mk(
                    1,
                    "What material is the object made of?",
                    QuestionType::Attribute,
                    QuestionFormat::Open,
                    "Wood and metal beads.",
                    TurnVerdict::Continue,
                ),
                mk(
                    2,
                    "What is the object used for?",
                    QuestionType::Function,
                    QuestionFormat::Open,
                    "Counting.",
                    TurnVerdict::Continue,
                ),
                mk(
                    3,
                    "Is it an abacus?",
                    QuestionType::Direct,
                    QuestionFormat::Closed,
                    "Correct.",
                    TurnVerdict::Correct,
                ),
            ],
            outcome: Outcome::Success,
            turn_count: 3,
            error: None,
        }
    }

    #[test]
    fn transcript_round_trip() {
        let tr = three_turn_success();
        let mut buf = Vec::new();
        write_jsonl(std::slice::from_ref(&tr), &mut buf).unwrap();
        let back = parse_transcripts(Cursor::new(&buf)).unwrap();
        assert_eq!(back, vec![tr]);
    }

    #[test]
    fn rejects_turn_count_above_t_max() {
        let mut tr = three_turn_success();
        tr.config.t_max = 2;
        let line = serde_json::to_string(&tr).unwrap();
        let text = format!("\n{line}\n");
        match parse_transcripts(Cursor::new(text)) {
            Err(PersistError::Rejected { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn malformed_line_is_numbered() {
        let tr = three_turn_success();
        let good = serde_json::to_string(&tr).unwrap();
        let text = format!("{good}\n{{not json\n");
        match parse_transcripts(Cursor::new(text)) {
            Err(PersistError::Malformed { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected malformed, got {other:?}"),
        }
    }

    #[test]
    fn keys_match_record_fields() {
        let value = serde_json::to_value(three_turn_success()).unwrap();
        let keys: Vec<_> = value.as_object().unwrap().keys().cloned().collect();
        assert_eq!(
            keys,
            [
                "config",
                "game_id",
                "outcome",
                "secret_object",
                "turn_count",
                "turns"
            ]
        );
        let turn = &value["turns"][0];
        for key in [
            "t",
            "question",
            "q_type",
            "q_format",
            "revision_count",
            "constraint_violation",
            "answer",
            "is_direct_guess",
            "verdict",
        ] {
            assert!(turn.get(key).is_some(), "missing {key}");
        }
    }

    #[test]
    fn corpus_file_loading() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("objects.txt");
        std::fs::write(&path, "Axe\naxe\n\nfork\n").unwrap();
        let corpus = load_corpus(&path).unwrap();
        assert_eq!(corpus.objects(), ["axe", "fork"]);

        let lines: String = (0..858).map(|i| format!("object {i}\n")).collect();
        std::fs::write(&path, lines).unwrap();
        assert_eq!(load_corpus(&path).unwrap().len(), 858);

        assert!(load_corpus(&dir.path().join("missing.txt")).is_err());
        std::fs::write(&path, "  \n").unwrap();
        assert!(load_corpus(&path).is_err());
    }

    #[test]
    fn gzip_is_transparent() {
        use flate2::{write::GzEncoder, Compression};
        let dir = tempfile::tempdir().unwrap();
        let plain = dir.path().join("a.txt");
        let gz = dir.path().join("a.txt.gz");
        std::fs::write(&plain, "one\ntwo\n").unwrap();
        let mut enc = GzEncoder::new(File::create(&gz).unwrap(), Compression::default());
        enc.write_all(b"one\ntwo\n").unwrap();
        enc.finish().unwrap();
        let read = |p: &Path| {
            open_text(p)
                .unwrap()
                .lines()
                .collect::<Result<Vec<_>, _>>()
                .unwrap()
        };
        assert_eq!(read(&plain), read(&gz));
    }
}
