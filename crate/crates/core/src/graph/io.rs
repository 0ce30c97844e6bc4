use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SocialGraph;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphFormat {
    EdgeList,
    Gml,
}

impl FromStr for GraphFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edge-list" | "edgelist" | "txt" => Ok(GraphFormat::EdgeList),
            "gml" => Ok(GraphFormat::Gml),
            other => Err(Error::invalid("format", format!("unknown graph format `{other}`"))),
        }
    }
}

pub fn load_edge_list(path: &Path, format: GraphFormat) -> Result<SocialGraph> {
    let text = fs::read_to_string(path)?;
    match format {
        GraphFormat::EdgeList => parse_edge_list(&text, path),
        GraphFormat::Gml => parse_gml(&text, path),
    }
}

/// Two whitespace-separated non-negative integer ids per line; `#` comments.
pub fn parse_edge_list(text: &str, path: &Path) -> Result<SocialGraph> {
    let mut edges = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let err = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message,
        };
        if tokens.len() != 2 {
            return Err(err(format!("expected 2 node ids, found {} tokens", tokens.len())));
        }
        let parse = |t: &str| t.parse::<u64>().map_err(|_| err(format!("invalid node id `{t}`")));
        edges.push((parse(tokens[0])?, parse(tokens[1])?));
    }
    Ok(SocialGraph::from_external_edges(edges, &[]))
}

pub fn write_edge_list(g: &SocialGraph, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(fs::File::create(path)?);
    for (i, j) in g.edges() {
        writeln!(out, "{} {}", g.external_id(i), g.external_id(j))?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Word(&'a str),
}

fn tokenize<'a>(text: &'a str, path: &Path) -> Result<Vec<(Token<'a>, usize)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let mut rest = line;
        loop {
            rest = rest.trim_start();
            if rest.is_empty() || rest.starts_with('#') {
                break;
            }
            if let Some(r) = rest.strip_prefix('[') {
                out.push((Token::Open, lineno + 1));
                rest = r;
            } else if let Some(r) = rest.strip_prefix(']') {
                out.push((Token::Close, lineno + 1));
                rest = r;
            } else if let Some(r) = rest.strip_prefix('"') {
                let end = r.find('"').ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: "unterminated string".into(),
                })?;
                out.push((Token::Word(&r[..end]), lineno + 1));
                rest = &r[end + 1..];
            } else {
                let end = rest
                    .find(|c: char| c.is_whitespace() || c == '[' || c == ']')
                    .unwrap_or(rest.len());
                out.push((Token::Word(&rest[..end]), lineno + 1));
                rest = &rest[end..];
            }
        }
    }
    Ok(out)
}

/// GML subset: `node [ id N ]` and `edge [ source A target B ]`; every other
/// key is skipped.
pub fn parse_gml(text: &str, path: &Path) -> Result<SocialGraph> {
    let tokens = tokenize(text, path)?;
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let parse_id = |word: &str, line: usize| {
        word.parse::<u64>()
            .map_err(|_| err(line, format!("invalid node id `{word}`")))
    };

    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    // Stack of open record kinds; record fields are collected at depth 2 (graph > node/edge).
    let mut stack: Vec<&str> = Vec::new();
    let mut current: Vec<(&str, &str, usize)> = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let (ref tok, line) = tokens[i];
        match tok {
            Token::Word(key) => match tokens.get(i + 1) {
                Some((Token::Open, _)) => {
                    stack.push(key);
                    if matches!(*key, "node" | "edge") {
                        current.clear();
                    }
                    i += 2;
                }
                Some((Token::Word(value), _)) => {
                    if matches!(stack.last(), Some(&"node") | Some(&"edge")) {
                        current.push((key, value, line));
                    }
                    i += 2;
                }
                _ => return Err(err(line, format!("key `{key}` has no value"))),
            },
            Token::Close => {
                let kind = stack.pop().ok_or_else(|| err(line, "unbalanced `]`".into()))?;
                let field = |name: &str| current.iter().find(|(k, _, _)| *k == name);
                match kind {
                    "node" => {
                        let &(_, v, l) = field("id").ok_or_else(|| err(line, "node record without `id`".into()))?;
                        nodes.push(parse_id(v, l)?);
                    }
                    "edge" => {
                        let &(_, s, ls) =
                            field("source").ok_or_else(|| err(line, "edge record without `source`".into()))?;
                        let &(_, t, lt) =
                            field("target").ok_or_else(|| err(line, "edge record without `target`".into()))?;
                        edges.push((parse_id(s, ls)?, parse_id(t, lt)?));
                    }
                    _ => {}
                }
                i += 1;
            }
            Token::Open => return Err(err(line, "unexpected `[`".into())),
        }
    }
    if !stack.is_empty() {
        return Err(err(text.lines().count(), "unclosed `[`".into()));
    }
    Ok(SocialGraph::from_external_edges(edges, &nodes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<SocialGraph> {
        parse_edge_list(text, Path::new("test.txt"))
    }

    #[test]
    fn simple_path() {
        let g = parse("0 1\n1 2\n").unwrap();
        assert_eq!(g.n_nodes(), 3);
        assert_eq!(g.n_edges(), 2);
        assert_eq!(g.degree(g.index_of(1).unwrap()), 2);
    }

    #[test]
    fn duplicate_collapses() {
        let g = parse("0 1\n1 0\n").unwrap();
        assert_eq!((g.n_nodes(), g.n_edges()), (2, 1));
    }

    #[test]
    fn self_loop_dropped() {
        let g = parse("0 0\n").unwrap();
        assert_eq!((g.n_nodes(), g.n_edges()), (1, 0));
    }

    #[test]
    fn comments_and_sparse_ids() {
        let g = parse("# header\n\n100 7\n7 3000\n").unwrap();
        assert_eq!(g.external_ids(), &[7, 100, 3000]);
        assert!(g.has_edge(0, 1) && g.has_edge(0, 2));
    }

    #[test]
    fn errors_name_the_line() {
        match parse("0 1\n0 1 2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse("0 1\n\nx 2\n") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("x"));
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("5\n").is_err());
    }

    #[test]
    fn gml_subset() {
        let text = r#"
graph [
  directed 0
  label "friends"
  node [ id 0 label "a" ]
  node [ id 1 ]
  node [ id 9 ]
  edge [ source 0 target 1 weight 2.5 ]
  edge [
    source 1
    target 0
  ]
]
"#;
        let g = parse_gml(text, Path::new("g.gml")).unwrap();
        assert_eq!(g.n_nodes(), 3);
        assert_eq!(g.n_edges(), 1);
        assert_eq!(g.degree(g.index_of(9).unwrap()), 0);
    }

    #[test]
    fn gml_errors() {
        assert!(parse_gml("graph [ edge [ source 0 ] ]", Path::new("g")).is_err());
        assert!(parse_gml("graph [ node [ id x ] ]", Path::new("g")).is_err());
        assert!(parse_gml("graph [ node [ id 1 ]", Path::new("g")).is_err());
    }

    #[test]
    fn write_then_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.txt");
        let g = parse("3 9\n9 12\n12 3\n").unwrap();
        write_edge_list(&g, &path).unwrap();
        let h = load_edge_list(&path, GraphFormat::EdgeList).unwrap();
        assert_eq!(g, h);
    }
}
