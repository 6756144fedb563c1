#![allow(dead_code)]

use codeprov_core::{Corpus, Origin, Provenance, Snippet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MARKER: &str = "// generated-by-assistant";

const NOUNS: &[&str] = &[
    "count", "total", "index", "value", "result", "buffer", "limit", "score", "offset", "size", "left", "right", "node",
    "item", "sum", "peak", "acc", "step", "flag", "width",
];
const VERBS: &[&str] = &["compute", "find", "merge", "scan", "build", "check", "update", "collect", "reduce", "solve"];

fn pick<'a>(rng: &mut ChaCha8Rng, from: &[&'a str]) -> &'a str {
    from[rng.random_range(0..from.len())]
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_ascii_uppercase().to_string() + c.as_str()).unwrap_or_default()
}

fn statement(rng: &mut ChaCha8Rng, a: &str, b: &str, out: &mut Vec<String>) {
    let x = pick(rng, NOUNS);
    let k = rng.random_range(1..50);
    match rng.random_range(0..4) {
        0 => {
            out.push(format!("        for (int i = 0; i < {a}.length; i++) {{"));
            out.push(format!("            {b} += {a}[i] * {k};"));
            out.push("        }".into());
        }
        1 => {
            out.push(format!("        if ({b} > {k}) {{"));
            out.push(format!("            {b} = {b} % {k};"));
            out.push("        }".into());
        }
        2 => out.push(format!("        int {x}{k} = {b} + {k};")),
        _ => {
            out.push(format!("        while ({b} < {k}) {{"));
            out.push(format!("            {b}++;"));
            out.push("        }".into());
        }
    }
}

/// A compilable-looking Java class whose shape depends on `rng`.
pub fn java_class(rng: &mut ChaCha8Rng, task: usize) -> (String, String) {
    let class = format!("{}{}{task}", capitalize(pick(rng, VERBS)), capitalize(pick(rng, NOUNS)));
    let mut lines = vec![format!("public class {class} {{")];
    let methods = rng.random_range(1..4);
    let mut names = Vec::new();
    for m in 0..methods {
        let name = format!("{}{}{m}", pick(rng, VERBS), capitalize(pick(rng, NOUNS)));
        let (a, b) = (pick(rng, NOUNS), format!("{}Acc", pick(rng, NOUNS)));
        lines.push(format!("    static int {name}(int[] {a}, int {b}) {{"));
        for _ in 0..rng.random_range(1..5) {
            statement(rng, a, &b, &mut lines);
        }
        lines.push(format!("        return {b};"));
        lines.push("    }".into());
        lines.push(String::new());
        names.push(name);
    }
    lines.push("    public static void main(String[] args) {".into());
    lines.push(format!("        int[] data = {{{}, {}, {}}};", rng.random_range(0..9), rng.random_range(0..9), rng.random_range(0..9)));
    for name in &names {
        lines.push(format!("        System.out.println(\"{name}: \" + {name}(data, 0));"));
    }
    lines.push("    }".into());
    lines.push("}".into());
    (class, lines.join("\n") + "\n")
}

fn header(task: usize) -> String {
    format!("package edu.course.task{task};\n\nimport java.util.List;\n\n")
}

/// `pairs` tasks, each solved twice with the same code; the generated
/// member additionally carries [`MARKER`] above the class.
pub fn marked_pairs(pairs: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut snippets = Vec::with_capacity(2 * pairs);
    for t in 0..pairs {
        let (_, body) = java_class(&mut rng, t);
        let key = format!("task{t:03}");
        snippets.push(Snippet::new(format!("{key}-h"), Origin::Human, Some(key.clone()), format!("{}{body}", header(t))));
        snippets.push(Snippet::new(format!("{key}-g"), Origin::Chatgpt, Some(key.clone()), format!("{}{MARKER}\n{body}", header(t))));
    }
    Corpus::new(snippets, Provenance::PairedP).unwrap()
}

/// Short classes; human ones declare a package, generated ones never do.
pub fn separable(per_class: usize, seed: u64) -> Corpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut short = |i: usize| {
        let name = format!("{}{}", capitalize(pick(&mut rng, VERBS)), capitalize(pick(&mut rng, NOUNS)));
        format!("public class {name}{i} {{\n    int {}() {{ return {}; }}\n}}\n", pick(&mut rng, VERBS), rng.random_range(0..100))
    };
    let mut snippets = Vec::with_capacity(2 * per_class);
    for i in 0..per_class {
        snippets.push(Snippet::new(format!("h{i:03}"), Origin::Human, None, format!("package p{i};\n\n{}", short(i))));
        snippets.push(Snippet::new(format!("g{i:03}"), Origin::Chatgpt, None, short(i + per_class)));
    }
    Corpus::new(snippets, Provenance::UnpairedU).unwrap()
}
