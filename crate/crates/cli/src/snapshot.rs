//! Line-oriented graph snapshots.
//!
//! ```text
//! <t> <N> <M>
//! node <id> <birth_t>      N lines, ascending id
//! edge <i> <j>             M lines, ascending (i, j)
//! ```

use std::fmt::Write as _;

use flamerank_core::{NodeId, TemporalGraph};

use crate::Error;

pub fn write_snapshot(graph: &TemporalGraph) -> String {
    let mut out = String::new();
    writeln!(out, "{} {} {}", graph.time(), graph.population_size(), graph.edge_count()).unwrap();
    for &i in graph.nodes() {
        writeln!(out, "node {} {}", i.0, graph.birth_time(i).expect("live")).unwrap();
    }
    for (i, j) in graph.edges() {
        writeln!(out, "edge {} {}", i.0, j.0).unwrap();
    }
    out
}

pub fn read_snapshot(text: &str) -> Result<TemporalGraph, Error> {
    let bad = |line: usize, msg: &str| Error::Snapshot { line, message: msg.to_string() };
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l.trim())).filter(|(_, l)| !l.is_empty());
    let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
    let head: Vec<u64> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| bad(1, "header must be `t N M`"))?;
    let [t, n, m] = head[..] else {
        return Err(bad(1, "header must be `t N M`"));
    };

    let mut g = TemporalGraph::new();
    let (mut nodes, mut edges) = (0u64, 0u64);
    for (k, line) in lines {
        let mut f = line.split_whitespace();
        let tag = f.next().unwrap_or_default();
        let nums: Vec<u64> = f
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| bad(k, "expected integers"))?;
        match (tag, &nums[..]) {
            ("node", &[id, birth]) => {
                if edges > 0 {
                    return Err(bad(k, "node line after edge lines"));
                }
                g.insert_node(NodeId(id), birth).map_err(|e| bad(k, &e.to_string()))?;
                nodes += 1;
            }
            ("edge", &[i, j]) => {
                g.add_edge(NodeId(i), NodeId(j), false).map_err(|e| bad(k, &e.to_string()))?;
                edges += 1;
            }
            _ => return Err(bad(k, "expected `node <id> <birth>` or `edge <i> <j>`")),
        }
    }
    if nodes != n || g.edge_count() as u64 != m {
        return Err(bad(1, &format!("header declares {n} nodes and {m} edges, found {nodes} and {edges}")));
    }
    g.set_time(t);
    Ok(g)
}
