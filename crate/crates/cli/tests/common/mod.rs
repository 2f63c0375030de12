//! Shared fixtures for the integration and acceptance suites: a planted
//! three-window corpus with one known shift, one shift/merge, one topic
//! change, and one sub-threshold shift variant; plus a DOT syntax checker.
//!
//! Each test binary uses a different subset of these helpers.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use commtrace::config::PipelineConfig;

pub const IR_BLOCK: &[&str] = &["retrieval", "search", "ranking"];
pub const SW_BLOCK: &[&str] = &["semantic", "ontologies", "rdf"];

/// One community occupying one window: every member gets a solo document
/// in that year carrying the keyword block, and a single citing document
/// co-cites the whole set (yielding a unit-weight clique).
pub struct Plant {
    pub year: i32,
    pub members: Vec<String>,
    pub keywords: Vec<String>,
}

pub fn names(prefix: &str, range: std::ops::Range<usize>) -> Vec<String> {
    range.map(|i| format!("{prefix}{i:02}")).collect()
}

fn block(words: &[&str]) -> Vec<String> {
    words.iter().map(|w| w.to_string()).collect()
}

/// The planted corpus described window by window:
///
/// * w0 (2000): `prev` = p00..p29 (IR block), `m` = m00..m09 (pblock),
///   `n` = n00..n14 (qblock).
/// * w1 (2001): shift `s` = p00..p09 under the SW block; continuation
///   `c` = p10..p29 (IR block); merge target `nn` = n00..n14 + m00..m08
///   (qblock); `t` = t00..t11 (rblock); `pv` = v00..v11 (wblock).
/// * w2 (2002): `c` and `nn` repeat unchanged; `t` keeps its members but
///   swaps to zblock (planted topic change); `pv` splits into `cv` =
///   v04..v11 (wblock) and the 4-member `vv` = v00..v03 (yblock), which
///   stays below the 5-author overlap floor.
pub fn planted_communities() -> Vec<Plant> {
    let p = names("p", 0..30);
    let m = names("m", 0..10);
    let n = names("n", 0..15);
    let t = names("t", 0..12);
    let v = names("v", 0..12);
    let mut nn = n.clone();
    nn.extend(m[..9].iter().cloned());
    vec![
        Plant {
            year: 2000,
            members: p.clone(),
            keywords: block(IR_BLOCK),
        },
        Plant {
            year: 2000,
            members: m.clone(),
            keywords: block(&["pblocka", "pblockb"]),
        },
        Plant {
            year: 2000,
            members: n.clone(),
            keywords: block(&["qblocka", "qblockb"]),
        },
        Plant {
            year: 2001,
            members: p[..10].to_vec(),
            keywords: block(SW_BLOCK),
        },
        Plant {
            year: 2001,
            members: p[10..].to_vec(),
            keywords: block(IR_BLOCK),
        },
        Plant {
            year: 2001,
            members: nn.clone(),
            keywords: block(&["qblocka", "qblockb"]),
        },
        Plant {
            year: 2001,
            members: t.clone(),
            keywords: block(&["rblocka", "rblockb"]),
        },
        Plant {
            year: 2001,
            members: v.clone(),
            keywords: block(&["wblocka", "wblockb"]),
        },
        Plant {
            year: 2002,
            members: p[10..].to_vec(),
            keywords: block(IR_BLOCK),
        },
        Plant {
            year: 2002,
            members: nn,
            keywords: block(&["qblocka", "qblockb"]),
        },
        Plant {
            year: 2002,
            members: t,
            keywords: block(&["zblocka", "zblockb"]),
        },
        Plant {
            year: 2002,
            members: v[4..].to_vec(),
            keywords: block(&["wblocka", "wblockb"]),
        },
        Plant {
            year: 2002,
            members: v[..4].to_vec(),
            keywords: block(&["yblocka", "yblockb"]),
        },
    ]
}

/// Writes citations.tsv, docs.tsv, keywords.tsv for the given plants and
/// returns a ready config rooted in `dir`.
pub fn write_corpus(dir: &Path, plants: &[Plant], out_name: &str) -> PipelineConfig {
    let mut citations = String::new();
    let mut docs = String::new();
    let mut keywords = String::new();
    for (pidx, plant) in plants.iter().enumerate() {
        let citing = format!("cite_{pidx}");
        for member in &plant.members {
            let doc_id = format!("d_{member}_{}", plant.year);
            writeln!(citations, "{citing}\t{doc_id}").unwrap();
            writeln!(docs, "{doc_id}\t{}\t{member}", plant.year).unwrap();
            writeln!(keywords, "{doc_id}\t{}", plant.keywords.join(";")).unwrap();
        }
    }
    std::fs::write(dir.join("citations.tsv"), citations).unwrap();
    std::fs::write(dir.join("docs.tsv"), docs).unwrap();
    std::fs::write(dir.join("keywords.tsv"), keywords).unwrap();

    let json = serde_json::json!({
        "version": 1,
        "citations": dir.join("citations.tsv"),
        "docs": dir.join("docs.tsv"),
        "keywords": dir.join("keywords.tsv"),
        "first_year": 2000,
        "last_year": 2002,
        "window_length": 1,
        "window_stride": 1,
        "out": dir.join(out_name),
    });
    let config_path = dir.join("config.json");
    std::fs::write(&config_path, serde_json::to_string_pretty(&json).unwrap()).unwrap();
    PipelineConfig::from_file(&config_path).unwrap()
}

pub fn planted_config(dir: &Path) -> PipelineConfig {
    write_corpus(dir, &planted_communities(), "out")
}

/// Reads events.jsonl into serde_json values.
pub fn read_events(out: &Path) -> Vec<serde_json::Value> {
    let text = std::fs::read_to_string(out.join("events.jsonl")).unwrap();
    text.lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

/// Loads a window's partition.tsv as community-id -> member list.
pub fn read_partition(out: &Path, window: usize) -> BTreeMap<usize, Vec<String>> {
    let path = out.join(format!("w{window:03}")).join("partition.tsv");
    let mut map: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for line in std::fs::read_to_string(&path).unwrap().lines() {
        let mut cols = line.split('\t');
        let author = cols.next().unwrap().to_string();
        let cid: usize = cols.next().unwrap().parse().unwrap();
        map.entry(cid).or_default().push(author);
    }
    map
}

/// All files under a directory (relative paths), sorted.
pub fn file_tree(root: &Path) -> Vec<PathBuf> {
    fn walk(dir: &Path, root: &Path, acc: &mut Vec<PathBuf>) {
        for entry in std::fs::read_dir(dir).unwrap().flatten() {
            let path = entry.path();
            if path.is_dir() {
                walk(&path, root, acc);
            } else {
                acc.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    let mut acc = Vec::new();
    walk(root, root, &mut acc);
    acc.sort();
    acc
}

// ---------------------------------------------------------------------------
// A small validator for the DOT subset of the standard grammar:
// digraph ID? { stmt* } with node/edge/attribute statements, quoted and
// bare identifiers, attribute lists, and anonymous subgraphs.

pub fn parse_dot(text: &str) -> Result<(), String> {
    let tokens = dot_tokenize(text)?;
    let mut pos = 0usize;
    expect_keyword(&tokens, &mut pos, "digraph")?;
    if matches!(tokens.get(pos), Some(DotToken::Id(_))) {
        pos += 1;
    }
    parse_block(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(format!("trailing tokens after graph body: {:?}", tokens.get(pos)));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
enum DotToken {
    Id(String),
    Symbol(char),
    Arrow,
}

fn dot_tokenize(text: &str) -> Result<Vec<DotToken>, String> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c == '"' {
            let mut s = String::new();
            i += 1;
            loop {
                match chars.get(i) {
                    Some('"') => {
                        i += 1;
                        break;
                    }
                    Some('\\') => {
                        let escaped = chars.get(i + 1).ok_or("dangling escape")?;
                        s.push(*escaped);
                        i += 2;
                    }
                    Some(&ch) => {
                        s.push(ch);
                        i += 1;
                    }
                    None => return Err("unterminated quoted string".into()),
                }
            }
            tokens.push(DotToken::Id(s));
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            tokens.push(DotToken::Arrow);
            i += 2;
        } else if matches!(c, '{' | '}' | '[' | ']' | '=' | ';' | ',') {
            tokens.push(DotToken::Symbol(c));
            i += 1;
        } else if c.is_alphanumeric() || c == '_' || c == '.' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                s.push(chars[i]);
                i += 1;
            }
            tokens.push(DotToken::Id(s));
        } else {
            return Err(format!("unexpected character '{c}'"));
        }
    }
    Ok(tokens)
}

fn expect_keyword(tokens: &[DotToken], pos: &mut usize, kw: &str) -> Result<(), String> {
    match tokens.get(*pos) {
        Some(DotToken::Id(s)) if s == kw => {
            *pos += 1;
            Ok(())
        }
        other => Err(format!("expected '{kw}', found {other:?}")),
    }
}

fn expect_symbol(tokens: &[DotToken], pos: &mut usize, sym: char) -> Result<(), String> {
    match tokens.get(*pos) {
        Some(DotToken::Symbol(c)) if *c == sym => {
            *pos += 1;
            Ok(())
        }
        other => Err(format!("expected '{sym}', found {other:?}")),
    }
}

fn parse_block(tokens: &[DotToken], pos: &mut usize) -> Result<(), String> {
    expect_symbol(tokens, pos, '{')?;
    loop {
        match tokens.get(*pos) {
            Some(DotToken::Symbol('}')) => {
                *pos += 1;
                return Ok(());
            }
            Some(DotToken::Symbol('{')) => parse_block(tokens, pos)?,
            Some(DotToken::Id(_)) => parse_statement(tokens, pos)?,
            other => return Err(format!("unexpected token in block: {other:?}")),
        }
    }
}

fn parse_statement(tokens: &[DotToken], pos: &mut usize) -> Result<(), String> {
    // id ( '=' id | arrow id attrs? | attrs? )  with optional ';'
    *pos += 1; // consume leading id
    match tokens.get(*pos) {
        Some(DotToken::Symbol('=')) => {
            *pos += 1;
            match tokens.get(*pos) {
                Some(DotToken::Id(_)) => *pos += 1,
                other => return Err(format!("expected value after '=', found {other:?}")),
            }
        }
        Some(DotToken::Arrow) => {
            *pos += 1;
            match tokens.get(*pos) {
                Some(DotToken::Id(_)) => *pos += 1,
                other => return Err(format!("expected edge target, found {other:?}")),
            }
            if matches!(tokens.get(*pos), Some(DotToken::Symbol('['))) {
                parse_attr_list(tokens, pos)?;
            }
        }
        Some(DotToken::Symbol('[')) => parse_attr_list(tokens, pos)?,
        _ => {}
    }
    if matches!(tokens.get(*pos), Some(DotToken::Symbol(';'))) {
        *pos += 1;
    }
    Ok(())
}

fn parse_attr_list(tokens: &[DotToken], pos: &mut usize) -> Result<(), String> {
    expect_symbol(tokens, pos, '[')?;
    loop {
        match tokens.get(*pos) {
            Some(DotToken::Symbol(']')) => {
                *pos += 1;
                return Ok(());
            }
            Some(DotToken::Id(_)) => {
                *pos += 1;
                expect_symbol(tokens, pos, '=')?;
                match tokens.get(*pos) {
                    Some(DotToken::Id(_)) => *pos += 1,
                    other => return Err(format!("expected attribute value, found {other:?}")),
                }
                if matches!(tokens.get(*pos), Some(DotToken::Symbol(',' | ';'))) {
                    *pos += 1;
                }
            }
            other => return Err(format!("unexpected token in attribute list: {other:?}")),
        }
    }
}
