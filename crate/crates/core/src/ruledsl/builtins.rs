use super::{parse, RuleAst};

/// Named seed rules. `uniform_random` uses one broadcast `rand()` draw, so
/// its samples lie on the box diagonal.
pub const BUILTIN_SOURCES: [(&str, &str); 5] = [
    (
        "de_rand_1_bin",
        "F = 0.5;\nCR = 0.9;\nv = r1 + F * (r2 - r3);\noffspring = bincross(x, clamp(v), CR);\n",
    ),
    (
        "de_best_1_bin",
        "F = 0.5;\nCR = 0.9;\nv = best + F * (r1 - r2);\noffspring = bincross(x, clamp(v), CR);\n",
    ),
    (
        "de_current_to_best_1_bin",
        "F = 0.5;\nCR = 0.9;\nv = x + F * (best - x) + F * (r1 - r2);\noffspring = bincross(x, clamp(v), CR);\n",
    ),
    ("no_op", "offspring = x;\n"),
    ("uniform_random", "offspring = clamp(lb + rand() * (ub - lb));\n"),
];

pub fn builtin_rules() -> Vec<(&'static str, RuleAst)> {
    BUILTIN_SOURCES
        .iter()
        .map(|(name, src)| (*name, parse(src).expect("builtin rules parse")))
        .collect()
}

pub fn builtin_rule(name: &str) -> Option<RuleAst> {
    BUILTIN_SOURCES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, src)| parse(src).expect("builtin rules parse"))
}
