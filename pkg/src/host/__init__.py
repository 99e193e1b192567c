"""
Host-side models: memory traces, address map, last-level cache and the
multi-core execution engine.
"""
