//! Curation of web archives into filtered interleaved image-text documents
//! and alt-text caption pairs.

pub mod assemble;
pub mod caption;
pub mod config;
pub mod document;
pub mod dom;
pub mod fetch;
pub mod filter;
pub mod io_util;
pub mod lid;
pub mod pipeline;
pub mod stats;
pub mod text;
pub mod warc;
