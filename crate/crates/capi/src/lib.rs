// C ABI surface; see include/subdiv.h.
