"""Forward-secure two-factor authentication.

A PIN-and-token protocol in which every sensitive message is sealed under
single-use keys drawn from a forward-secure generator, the PIN's verifier
key lives only on the token while the verifier itself lives only on the
server, and counters keep both generators in lockstep across message
loss.  The package also ships the strawman baselines it improves on (with
working attacks), a security-game harness, and a cost bench.
"""

__version__ = "0.1.0"
