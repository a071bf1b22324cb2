"""Dataset ingestion, embedding cache, synthetic benchmark, reporting, CLI."""
