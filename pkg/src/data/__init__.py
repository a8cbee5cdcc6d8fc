# Input data, shard splitting and synthetic datasets
