pub mod cli;
pub mod code_tree;
pub mod dimension;
pub mod exterior;
pub mod fs;
pub mod io;
pub mod sampling;
pub mod singular;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/exterior.md")]
    mod exterior {}
    #[doc = include_str!("../../../book/src/singular.md")]
    mod singular {}
    #[doc = include_str!("../../../book/src/condition.md")]
    mod condition {}
    #[doc = include_str!("../../../book/src/code_tree.md")]
    mod code_tree {}
    #[doc = include_str!("../../../book/src/dimension.md")]
    mod dimension {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
