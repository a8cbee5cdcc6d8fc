# Report tables and posterior distances
