# DP-mixture Gibbs samplers
