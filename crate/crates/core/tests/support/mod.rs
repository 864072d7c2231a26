pub mod sql_corpus;
