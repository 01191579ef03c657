use std::fmt::Write;

use super::graph::PortGraph;

/// Graphviz rendering for debugging: one record-shaped node per graph node
/// with a field per port.
pub fn to_dot(g: &PortGraph) -> String {
    let mut out = String::from("graph portgraph {\n  node [shape=record];\n");
    for (n, node) in g.nodes() {
        let ports: Vec<String> = node
            .ports
            .iter()
            .map(|p| format!("<{p}> {}", escape(g.port(*p).map_or("", |x| x.record.name().unwrap_or("")))))
            .collect();
        let title = escape(&node.record.to_string());
        if ports.is_empty() {
            let _ = writeln!(out, "  {n} [label=\"{title}\"];");
        } else {
            let _ = writeln!(out, "  {n} [label=\"{{{title}|{{{}}}}}\"];", ports.join("|"));
        }
    }
    for (e, edge) in g.edges() {
        let end = |p| {
            let port = g.port(p).expect("consistent graph");
            format!("{}:{p}", port.node)
        };
        let _ = writeln!(
            out,
            "  {} -- {} [label=\"{}\", id=\"{e}\"];",
            end(edge.ends[0]),
            end(edge.ends[1]),
            escape(&edge.record.to_string())
        );
    }
    out.push_str("}\n");
    out
}

fn escape(s: &str) -> String {
    let mut o = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '"' | '{' | '}' | '|' | '<' | '>' | '\\' => {
                o.push('\\');
                o.push(c);
            }
            _ => o.push(c),
        }
    }
    o
}
