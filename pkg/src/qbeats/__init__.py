"""Single-photon quantum beats of a trapped 40Ca+ ion in Lambda and V schemes."""

__version__ = "0.1.0"
