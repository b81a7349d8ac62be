//! Random FPQL queries that typecheck and evaluate without runtime errors.
//!
//! Expressions are built top-down from a wanted type. Object expressions
//! carry their static class and whether they may be null; nullable values
//! only reach positions where null is harmless (equality, navigation, `->`,
//! type tests) or sit behind a `<> null` or `= null` guard.

use std::collections::BTreeSet;

use pvdb_core::query::metamodel::Builtin;
use pvdb_core::query::{QueryAst, TExpr, TKind};
use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Operations every generated file defines, in context Revision.
pub const HELPER_OPS: &str = "context Revision
def : getRootRevision() : Revision =
  if parent = null then self else parent.getRootRevision() endif
def : depthAtLeast(n : Integer) : Boolean =
  if n <= 1 then true else if parent = null then false else parent.depthAtLeast(n - 1) endif endif
def : hasFile(fileName : String) : Boolean =
  tree.entries->closure(e : DirectoryEntry |
    if e.child.oclIsKindOf(Directory) then e.child.oclAsType(Directory).entries else e.oclAsSet() endif
  )->exists(e : DirectoryEntry | e.name = fileName)
";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum C {
    Graph,
    Origin,
    Visit,
    Node,
    Snapshot,
    Branch,
    Release,
    Revision,
    Directory,
    Entry,
    Content,
}

impl C {
    fn name(self) -> &'static str {
        match self {
            C::Graph => "Graph",
            C::Origin => "Origin",
            C::Visit => "OriginVisit",
            C::Node => "Node",
            C::Snapshot => "Snapshot",
            C::Branch => "SnapshotBranch",
            C::Release => "Release",
            C::Revision => "Revision",
            C::Directory => "Directory",
            C::Entry => "DirectoryEntry",
            C::Content => "Content",
        }
    }

    fn is_node(self) -> bool {
        matches!(
            self,
            C::Node | C::Snapshot | C::Release | C::Revision | C::Directory | C::Content
        )
    }

    fn conforms(self, to: C) -> bool {
        self == to || (to == C::Node && self.is_node())
    }

    fn related(self, other: C) -> bool {
        self.conforms(other) || other.conforms(self)
    }
}

const NODE_CLASSES: [C; 6] = [
    C::Node,
    C::Snapshot,
    C::Release,
    C::Revision,
    C::Directory,
    C::Content,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Elem {
    Obj(C),
    Int,
    Str,
}

impl Elem {
    fn conforms(self, to: Elem) -> bool {
        match (self, to) {
            (Elem::Obj(a), Elem::Obj(b)) => a.conforms(b),
            (a, b) => a == b,
        }
    }
}

struct Var {
    name: String,
    class: C,
}

struct Obj {
    text: String,
    class: C,
    nullable: bool,
}

const STRINGS: [&str; 10] = [
    "refs/heads/main",
    "refs/heads/master",
    "refs/heads/develop",
    "AndroidManifest.xml",
    "README.md",
    "src",
    "",
    "https://github.com/fixture/a",
    "https://gitlab.com",
    "it's\n",
];

const CMP: [&str; 6] = ["=", "<>", "<", "<=", ">", ">="];

pub struct QueryGen<'r> {
    rng: &'r mut ChaCha8Rng,
    vars: Vec<Var>,
    /// Element class of the innermost iterator when it binds no name.
    implicit: Option<C>,
    next_var: usize,
}

impl<'r> QueryGen<'r> {
    pub fn new(rng: &'r mut ChaCha8Rng) -> Self {
        QueryGen {
            rng,
            vars: Vec::new(),
            implicit: None,
            next_var: 0,
        }
    }

    /// A complete query file: the entry operation followed by the helpers.
    pub fn query(&mut self, depth: u32) -> String {
        let body = match self.rng.random_range(0..6) {
            0 | 1 => format!("origins->select({})", self.origin_predicate(true, depth)),
            2 => format!("origins->select({})", self.origin_predicate(false, depth)),
            3 => {
                let p1 = self.origin_predicate(true, depth);
                let named = self.flip();
                let p2 = self.origin_predicate(named, depth);
                format!("origins->select({p1})->select({p2})")
            }
            4 => {
                let p = self.origin_predicate(true, depth);
                let v = self.fresh();
                format!("origins->select({p})->collect({v} : Origin | {v})")
            }
            _ => {
                let c = self.boolean(depth.min(2));
                let p = self.origin_predicate(true, depth);
                format!("if {c} then origins->select({p}) else origins endif")
            }
        };
        format!("context Graph\ndef : query() : Set(Origin) =\n  {body}\n{HELPER_OPS}")
    }

    fn origin_predicate(&mut self, named: bool, depth: u32) -> String {
        self.iterate(C::Origin, named, |g| {
            if g.chance(0.3) {
                return g.boolean(depth);
            }
            let atom = g.origin_atom(depth);
            match g.rng.random_range(0..4) {
                0 => atom,
                1 => format!("{atom} and {}", wrap(&g.boolean(depth))),
                2 => format!("{atom} or {}", wrap(&g.boolean(depth))),
                _ => format!("{} and {atom}", wrap(&g.boolean(depth))),
            }
        })
    }

    /// A predicate on the current origin that splits typical archives.
    fn origin_atom(&mut self, depth: u32) -> String {
        let o = match self.var_of(C::Origin) {
            Some(v) if self.implicit.is_none() => format!("{}.", v.text),
            _ => String::new(),
        };
        let t = self.rng.random_range(1_390_000_000..1_680_000_000i64);
        let k = self.rng.random_range(1..8);
        let branch = self.pick(&STRINGS[..3]);
        let inner = depth.saturating_sub(2);
        match self.rng.random_range(0..8) {
            0 => format!("{o}getLastSnapshot().branches->exists(b | b.name = '{branch}')"),
            1 => format!("{o}url < '{}'", self.pick(&["https://github.com/fixture/c", "https://gitlab.com", "https://github.com/m"])),
            2 => format!("{o}visits->size() >= {}", self.rng.random_range(1..5)),
            3 => {
                let body = self.iterate(C::Visit, true, |g| {
                    let v = g.vars.last().expect("bound").name.clone();
                    format!("{v}.timestamp > {t} and {}", wrap(&g.boolean(inner)))
                });
                format!("{o}visits->exists({body})")
            }
            4 => format!("{o}getLastSnapshot().branches.getRevision()->exists(r | r.depthAtLeast({k}))"),
            5 => format!("{o}getLastSnapshot().branches.getRevision()->exists(r | r.hasFile('AndroidManifest.xml'))"),
            _ => {
                let named = self.flip();
                let body = self.iterate(C::Revision, named, |g| {
                    let ts = if named { format!("{}.committerTimestamp", g.vars.last().expect("bound").name) } else { "committerTimestamp".into() };
                    format!("{ts} > {t} and {}", wrap(&g.boolean(inner)))
                });
                format!("{o}getLastSnapshot().branches.getRevision()->exists({body})")
            }
        }
    }

    fn flip(&mut self) -> bool {
        self.rng.random_bool(0.5)
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.random_bool(p)
    }

    fn fresh(&mut self) -> String {
        let v = format!("v{}", self.next_var);
        self.next_var += 1;
        v
    }

    fn pick<T: Copy>(&mut self, items: &[T]) -> T {
        *items.choose(self.rng).expect("non-empty")
    }

    fn var_of(&mut self, want: C) -> Option<Obj> {
        let candidates: Vec<&Var> = self
            .vars
            .iter()
            .filter(|v| v.class.conforms(want))
            .collect();
        candidates.choose(self.rng).map(|v| Obj {
            text: v.name.clone(),
            class: v.class,
            nullable: false,
        })
    }

    /// Iterator body over elements of `class`, as `header | body` when
    /// `named`, otherwise as a bare body with an implicit receiver.
    fn iterate(&mut self, class: C, named: bool, f: impl FnOnce(&mut Self) -> String) -> String {
        if named {
            let v = self.fresh();
            let typed = self.chance(0.3);
            self.vars.push(Var {
                name: v.clone(),
                class,
            });
            let saved = self.implicit.take();
            let body = f(self);
            self.implicit = saved;
            self.vars.pop();
            if typed {
                format!("{v} : {} | {body}", class.name())
            } else {
                format!("{v} | {body}")
            }
        } else {
            let saved = self.implicit.replace(class);
            let body = f(self);
            self.implicit = saved;
            body
        }
    }

    /// Like [`Self::iterate`], also covering scalar elements, which are
    /// always bound to a name. The closure receives the element text.
    fn iterate_elem(
        &mut self,
        elem: Elem,
        f: impl FnOnce(&mut Self, Option<String>) -> String,
    ) -> String {
        match elem {
            Elem::Obj(c) => {
                let named = self.chance(0.7);
                self.iterate(c, named, |g| {
                    let name = named.then(|| g.vars.last().expect("bound").name.clone());
                    f(g, name)
                })
            }
            Elem::Int | Elem::Str => {
                let v = self.fresh();
                let body = f(self, Some(v.clone()));
                format!("{v} | {body}")
            }
        }
    }

    /// `src.attr` for an attribute of `class`, or the bare attribute when
    /// the implicit receiver has that class.
    fn nav(&mut self, class: C, attr: &str, d: u32) -> Option<(String, bool)> {
        if self.implicit == Some(class) && self.flip() {
            return Some((attr.to_string(), false));
        }
        let src = self.object(class, d)?;
        Some((format!("{}.{attr}", wrap(&src.text)), src.nullable))
    }

    /// `src.attr` for a scalar attribute, with a null guard when needed.
    fn guarded(&mut self, class: C, attr: &str, default: &str, d: u32) -> Option<String> {
        if self.implicit == Some(class) && self.flip() {
            return Some(attr.to_string());
        }
        let src = self.object(class, d)?;
        let s = wrap(&src.text);
        Some(if src.nullable {
            format!("if {s} = null then {default} else {s}.{attr} endif")
        } else {
            format!("{s}.{attr}")
        })
    }

    pub fn boolean(&mut self, d: u32) -> String {
        if d == 0 {
            if let Some(a) = self.int_attr(0) {
                let op = self.pick(&CMP);
                return format!("{} {op} {}", wrap(&a), self.int(0));
            }
            return match self.rng.random_range(0..4) {
                0 => "true".into(),
                1 => "false".into(),
                2 => format!("{} = {}", self.int(0), self.int(0)),
                _ => format!("{} <> {}", self.string(0), self.string(0)),
            };
        }
        let d1 = d - 1;
        for _ in 0..8 {
            let out = match self.rng.random_range(0..20) {
                0 | 15 | 16 => {
                    let op = self.pick(&CMP);
                    Some(format!(
                        "{} {op} {}",
                        wrap(&self.int(d1)),
                        wrap(&self.int(d1))
                    ))
                }
                1 => {
                    let op = self.pick(&CMP);
                    Some(format!(
                        "{} {op} {}",
                        wrap(&self.string(d1)),
                        wrap(&self.string(d1))
                    ))
                }
                2 => {
                    let c = self.any_class();
                    let a = self.object(c, d1);
                    let b = if self.chance(0.4) {
                        None
                    } else {
                        self.object(c, d1)
                    };
                    let op = if self.flip() { "=" } else { "<>" };
                    a.map(|a| match b {
                        Some(b) => format!("{} {op} {}", wrap(&a.text), wrap(&b.text)),
                        None => format!("{} {op} null", wrap(&a.text)),
                    })
                }
                3 => {
                    let elem = self.any_elem();
                    self.set(elem, d1).map(|(s, _)| {
                        if self.flip() {
                            format!("{}->isEmpty()", wrap(&s))
                        } else {
                            format!("not {}->isEmpty()", wrap(&s))
                        }
                    })
                }
                4 => {
                    let elem = self.any_elem();
                    let s = self.set(elem, d1);
                    let x = match s.as_ref().map(|(_, e)| *e) {
                        Some(Elem::Obj(c)) => self.object(c, d1).map(|o| o.text),
                        Some(Elem::Int) => Some(self.int(d1)),
                        Some(Elem::Str) => Some(self.string(d1)),
                        None => None,
                    };
                    s.zip(x)
                        .map(|((s, _), x)| format!("{}->includes({x})", wrap(&s)))
                }
                5 | 6 => {
                    let elem = self.any_elem();
                    self.set(elem, d1).map(|(s, e)| {
                        let it = if self.flip() { "exists" } else { "forAll" };
                        let body = self.iterate_elem(e, |g, _| g.boolean(d1));
                        format!("{}->{it}({body})", wrap(&s))
                    })
                }
                7 => self.object(C::Node, d1).map(|o| {
                    let targets: Vec<C> = NODE_CLASSES
                        .into_iter()
                        .filter(|t| t.related(o.class))
                        .collect();
                    let target = self.pick(&targets);
                    let op = if self.flip() {
                        "oclIsKindOf"
                    } else {
                        "isKindOf"
                    };
                    format!("{}.{op}({})", wrap(&o.text), target.name())
                }),
                8 => Some(format!(
                    "{} and {}",
                    wrap(&self.boolean(d1)),
                    wrap(&self.boolean(d1))
                )),
                9 => Some(format!(
                    "{} or {}",
                    wrap(&self.boolean(d1)),
                    wrap(&self.boolean(d1))
                )),
                10 => Some(format!("not {}", wrap(&self.boolean(d1)))),
                11 => Some(format!(
                    "if {} then {} else {} endif",
                    self.boolean(d1),
                    self.boolean(d1),
                    self.boolean(d1)
                )),
                12 | 13 | 17 => self.object(C::Revision, d1).map(|r| {
                    let call = if self.flip() {
                        format!("depthAtLeast({})", self.rng.random_range(1..12))
                    } else {
                        format!("hasFile({})", quote(self.pick(&STRINGS)))
                    };
                    let recv = wrap(&r.text);
                    if r.nullable {
                        format!("({recv} <> null and {recv}.{call})")
                    } else {
                        format!("{recv}.{call}")
                    }
                }),
                14 | 18 => self.set(Elem::Obj(C::Revision), d1).map(|(s, _)| {
                    let n = self.rng.random_range(0..4);
                    format!("{}->size() >= {n}", wrap(&s))
                }),
                _ => Some(if self.flip() {
                    "true".into()
                } else {
                    "false".into()
                }),
            };
            if let Some(out) = out {
                return out;
            }
        }
        "true".into()
    }

    fn int(&mut self, d: u32) -> String {
        if d == 0 || self.chance(0.1) {
            return if self.chance(0.3) {
                self.rng.random_range(-5..40i64).to_string()
            } else {
                self.rng
                    .random_range(1_380_000_000..1_680_000_000i64)
                    .to_string()
            };
        }
        let d1 = d - 1;
        for _ in 0..8 {
            let out = match self.rng.random_range(0..7) {
                0 => {
                    let elem = self.any_elem();
                    self.set(elem, d1)
                        .map(|(s, _)| format!("{}->size()", wrap(&s)))
                }
                1 | 2 => self.int_attr(d1),
                3 => Some(format!("{} + {}", wrap(&self.int(d1)), wrap(&self.int(d1)))),
                4 => Some(format!("{} - {}", wrap(&self.int(d1)), wrap(&self.int(d1)))),
                5 => Some(format!(
                    "if {} then {} else {} endif",
                    self.boolean(d1),
                    self.int(d1),
                    self.int(d1)
                )),
                _ => Some("self.timestamp".into()),
            };
            if let Some(out) = out {
                return out;
            }
        }
        "0".into()
    }

    fn int_attr(&mut self, d: u32) -> Option<String> {
        let (class, attr) = self.pick(&[
            (C::Visit, "timestamp"),
            (C::Release, "timestamp"),
            (C::Revision, "commiterTimestamp"),
            (C::Revision, "committerTimestamp"),
            (C::Revision, "authorTimestamp"),
            (C::Entry, "perms"),
            (C::Content, "length"),
        ]);
        self.guarded(class, attr, "0", d)
    }

    fn string(&mut self, d: u32) -> String {
        if d == 0 || self.chance(0.3) {
            return quote(self.pick(&STRINGS));
        }
        let (class, attr) = self.pick(&[
            (C::Origin, "url"),
            (C::Branch, "name"),
            (C::Entry, "name"),
            (C::Revision, "author"),
            (C::Revision, "committer"),
            (C::Revision, "message"),
            (C::Release, "name"),
            (C::Release, "message"),
            (C::Node, "swhid"),
        ]);
        match self.guarded(class, attr, "''", d - 1) {
            Some(s) => s,
            None => quote(self.pick(&STRINGS)),
        }
    }

    fn any_class(&mut self) -> C {
        self.pick(&[
            C::Origin,
            C::Visit,
            C::Node,
            C::Snapshot,
            C::Branch,
            C::Release,
            C::Revision,
            C::Directory,
            C::Entry,
            C::Content,
        ])
    }

    fn any_elem(&mut self) -> Elem {
        match self.rng.random_range(0..10) {
            0 => Elem::Int,
            1 => Elem::Str,
            _ => Elem::Obj(self.any_class()),
        }
    }

    /// An object expression whose static class conforms to `want`.
    fn object(&mut self, want: C, d: u32) -> Option<Obj> {
        if want == C::Graph {
            return Some(Obj {
                text: "self".into(),
                class: C::Graph,
                nullable: false,
            });
        }
        if d == 0 || self.chance(0.35) {
            if let Some(v) = self.var_of(want) {
                return Some(v);
            }
            if d == 0 {
                return None;
            }
        }
        let d1 = d - 1;
        for _ in 0..4 {
            let out = match want {
                C::Snapshot => match self.rng.random_range(0..3) {
                    0 => {
                        if self.implicit == Some(C::Origin) && self.flip() {
                            Some(Obj {
                                text: "getLastSnapshot()".into(),
                                class: C::Snapshot,
                                nullable: false,
                            })
                        } else {
                            self.object(C::Origin, d1).map(|o| Obj {
                                text: format!("{}.getLastSnapshot()", wrap(&o.text)),
                                class: C::Snapshot,
                                nullable: false,
                            })
                        }
                    }
                    1 => self.nav(C::Visit, "snapshot", d1).map(|(t, n)| Obj {
                        text: t,
                        class: C::Snapshot,
                        nullable: n,
                    }),
                    _ => self.cast(C::Snapshot, d1),
                },
                C::Revision => match self.rng.random_range(0..5) {
                    0 | 1 => {
                        let text = if self.implicit == Some(C::Branch) && self.flip() {
                            Some("getRevision()".to_string())
                        } else {
                            self.object(C::Branch, d1)
                                .map(|b| format!("{}.getRevision()", wrap(&b.text)))
                        };
                        text.map(|text| Obj {
                            text,
                            class: C::Revision,
                            nullable: true,
                        })
                    }
                    2 => self.nav(C::Revision, "parent", d1).map(|(t, _)| Obj {
                        text: t,
                        class: C::Revision,
                        nullable: true,
                    }),
                    3 => self.object(C::Revision, d1).map(|r| Obj {
                        text: format!("{}.getRootRevision()", wrap(&r.text)),
                        class: C::Revision,
                        nullable: r.nullable,
                    }),
                    _ => self.cast(C::Revision, d1),
                },
                C::Directory => match self.rng.random_range(0..3) {
                    0 | 1 => self.nav(C::Revision, "tree", d1).map(|(t, n)| Obj {
                        text: t,
                        class: C::Directory,
                        nullable: n,
                    }),
                    _ => self.cast(C::Directory, d1),
                },
                C::Release | C::Content => self.cast(want, d1),
                C::Node => match self.rng.random_range(0..6) {
                    0 => self.nav(C::Branch, "target", d1).map(|(t, n)| Obj {
                        text: t,
                        class: C::Node,
                        nullable: n,
                    }),
                    1 => {
                        let attr = if self.flip() { "child" } else { "target" };
                        self.nav(C::Entry, attr, d1).map(|(t, n)| Obj {
                            text: t,
                            class: C::Node,
                            nullable: n,
                        })
                    }
                    2 => self.nav(C::Release, "target", d1).map(|(t, n)| Obj {
                        text: t,
                        class: C::Node,
                        nullable: n,
                    }),
                    3 | 4 => {
                        let c = self.pick(&NODE_CLASSES[1..]);
                        self.object(c, d1)
                    }
                    _ => self.cast(C::Node, d1),
                },
                // only reachable through iterator variables
                C::Graph | C::Origin | C::Visit | C::Branch | C::Entry => None,
            };
            if out.is_some() {
                return out;
            }
        }
        self.var_of(want).or_else(|| self.if_object(want, d))
    }

    fn if_object(&mut self, want: C, d: u32) -> Option<Obj> {
        if d < 2 || !self.chance(0.5) {
            return None;
        }
        let a = self.object(want, d - 2)?;
        let b = self.object(want, d - 2)?;
        let c = self.boolean(d - 2);
        let class = if a.class == b.class { a.class } else { C::Node };
        Some(Obj {
            text: format!("if {c} then {} else {} endif", a.text, b.text),
            class,
            nullable: a.nullable || b.nullable,
        })
    }

    /// A checked cast, null on failure.
    fn cast(&mut self, target: C, d: u32) -> Option<Obj> {
        let src = self.object(C::Node, d)?;
        if !src.class.related(target) {
            return None;
        }
        let op = if self.flip() { "oclAsType" } else { "asType" };
        Some(Obj {
            text: format!("{}.{op}({})", wrap(&src.text), target.name()),
            class: target,
            nullable: true,
        })
    }

    /// A collection whose element type conforms to `want`, with its static
    /// element type.
    fn set(&mut self, want: Elem, d: u32) -> Option<(String, Elem)> {
        for _ in 0..4 {
            let out = match self.rng.random_range(0..6) {
                0 if d > 0 => self.set(want, d - 1).map(|(s, e)| {
                    let p = self.iterate_elem(e, |g, _| g.boolean(d - 1));
                    (format!("{}->select({p})", wrap(&s)), e)
                }),
                1 if d > 0 => self
                    .set(want, d - 1)
                    .map(|(s, e)| (format!("{}->asSet()", wrap(&s)), e)),
                _ => self.base_set(want, d),
            };
            if out.is_some() {
                return out;
            }
        }
        None
    }

    fn base_set(&mut self, want: Elem, d: u32) -> Option<(String, Elem)> {
        let d1 = d.saturating_sub(1);
        let out = match want {
            Elem::Obj(C::Origin) => {
                let text = if self.flip() {
                    "origins"
                } else {
                    "self.origins"
                };
                Some((text.to_string(), want))
            }
            Elem::Obj(C::Visit) => self.nav(C::Origin, "visits", d1).map(|(t, _)| (t, want)),
            Elem::Obj(C::Branch) => self
                .nav(C::Snapshot, "branches", d1)
                .map(|(t, _)| (t, want)),
            Elem::Obj(C::Entry) => {
                if self.chance(0.4) {
                    let dir = self.object(C::Directory, d1)?;
                    let e = self.fresh();
                    Some((
                        format!(
                            "{}.entries->closure({e} : DirectoryEntry | if {e}.child.oclIsKindOf(Directory) then {e}.child.oclAsType(Directory).entries else {e}.oclAsSet() endif)",
                            wrap(&dir.text)
                        ),
                        want,
                    ))
                } else {
                    self.nav(C::Directory, "entries", d1)
                        .map(|(t, _)| (t, want))
                }
            }
            Elem::Obj(C::Revision) => match self.rng.random_range(0..4) {
                0 => self.nav(C::Revision, "parents", d1).map(|(t, _)| (t, want)),
                1 => self.object(C::Revision, d1).map(|r| {
                    let body = match self.rng.random_range(0..3) {
                        0 => "parent".to_string(),
                        1 => {
                            let v = self.fresh();
                            format!("{v} | {v}.parents")
                        }
                        _ => {
                            let v = self.fresh();
                            format!("{v} : Revision | {v}.parent")
                        }
                    };
                    (format!("{}->closure({body})", wrap(&r.text)), want)
                }),
                2 => self
                    .object(C::Revision, d1)
                    .map(|r| (format!("{}.oclAsSet()", wrap(&r.text)), want)),
                _ => self
                    .set(Elem::Obj(C::Branch), d1)
                    .map(|(b, _)| (format!("{}.getRevision()", wrap(&b)), want)),
            },
            Elem::Obj(C::Node) => match self.rng.random_range(0..3) {
                0 => self
                    .set(Elem::Obj(C::Branch), d1)
                    .map(|(b, _)| (format!("{}.target", wrap(&b)), want)),
                1 => self.set(Elem::Obj(C::Entry), d1).map(|(s, e)| {
                    let body = self.iterate_elem(e, |_, name| match name {
                        Some(v) => format!("{v}.child"),
                        None => "child".to_string(),
                    });
                    (format!("{}->collect({body})", wrap(&s)), want)
                }),
                _ => self
                    .object(C::Node, d1)
                    .map(|n| (format!("{}->asSet()", wrap(&n.text)), Elem::Obj(n.class))),
            },
            Elem::Obj(C::Snapshot) => self
                .set(Elem::Obj(C::Visit), d1)
                .map(|(v, _)| (format!("{}.snapshot", wrap(&v)), want)),
            Elem::Obj(C::Directory) => self
                .set(Elem::Obj(C::Revision), d1)
                .map(|(r, _)| (format!("{}.tree", wrap(&r)), want)),
            Elem::Obj(c) => self
                .object(c, d1)
                .map(|o| (format!("{}.oclAsSet()", wrap(&o.text)), Elem::Obj(o.class))),
            Elem::Int => self.set(Elem::Obj(C::Visit), d1).map(|(s, e)| {
                let body = self.iterate_elem(e, |_, name| match name {
                    Some(v) => format!("{v}.timestamp"),
                    None => "timestamp".to_string(),
                });
                (format!("{}->collect({body})", wrap(&s)), want)
            }),
            Elem::Str => self
                .set(Elem::Obj(C::Branch), d1)
                .map(|(s, _)| (format!("{}.name", wrap(&s)), want)),
        };
        debug_assert!(out.as_ref().is_none_or(|(_, e)| e.conforms(want)));
        out
    }
}

fn quote(s: &str) -> String {
    let mut out = String::from("'");
    for c in s.chars() {
        match c {
            '\'' => out.push_str("\\'"),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            c => out.push(c),
        }
    }
    out.push('\'');
    out
}

/// Parenthesizes anything that is not a single postfix chain or literal.
fn wrap(s: &str) -> String {
    let atom = !s.contains(' ')
        || (s.starts_with('\'') && s.ends_with('\'') && !s[1..s.len() - 1].contains('\''));
    if atom {
        s.to_string()
    } else {
        format!("({s})")
    }
}

/// Generates `n` query files from `seed`.
pub fn queries(seed: u64, n: usize, depth: u32) -> Vec<String> {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| QueryGen::new(&mut rng).query(depth))
        .collect()
}

/// Every expression kind a typed AST can hold, as named by [`node_kinds`].
pub const NODE_KINDS: &[&str] = &[
    "int",
    "str",
    "bool",
    "null",
    "self",
    "var",
    "attr collect=false",
    "attr collect=true",
    "getLastSnapshot collect=false",
    "getRevision collect=false",
    "getRevision collect=true",
    "oclAsSet collect=false",
    "isKindOf collect=false",
    "asType collect=false",
    "call collect=false",
    "select",
    "exists",
    "forAll",
    "collect",
    "closure",
    "Size",
    "IsEmpty",
    "Includes",
    "AsSet",
    "or",
    "and",
    "=",
    "<>",
    "<",
    "<=",
    ">",
    ">=",
    "+",
    "-",
    "not",
    "if",
];

fn node_kind(e: &TExpr) -> String {
    match &e.kind {
        TKind::Int(_) => "int".into(),
        TKind::Str(_) => "str".into(),
        TKind::Bool(_) => "bool".into(),
        TKind::Null => "null".into(),
        TKind::Var(0) => "self".into(),
        TKind::Var(_) => "var".into(),
        TKind::Attr { collect, .. } => format!("attr collect={collect}"),
        TKind::Builtin { op, collect, .. } => {
            let name = match op {
                Builtin::GetLastSnapshot => "getLastSnapshot",
                Builtin::GetRevision => "getRevision",
                Builtin::OclAsSet => "oclAsSet",
                Builtin::IsKindOf(_) => "isKindOf",
                Builtin::AsType(_) => "asType",
            };
            format!("{name} collect={collect}")
        }
        TKind::UserCall { collect, .. } => format!("call collect={collect}"),
        TKind::Iterate { kind, .. } => kind.name().to_string(),
        TKind::CollOp { op, .. } => format!("{op:?}"),
        TKind::Binary { op, .. } => op.symbol().to_string(),
        TKind::Not(_) => "not".into(),
        TKind::If { .. } => "if".into(),
    }
}

/// Kinds of the expressions occurring anywhere in `ast`.
pub fn node_kinds(ast: &QueryAst) -> BTreeSet<String> {
    let mut seen = BTreeSet::new();
    for op in &ast.ops {
        op.body.walk(&mut |e| {
            seen.insert(node_kind(e));
        });
    }
    seen
}
