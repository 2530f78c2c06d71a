"""
Command handlers for the BRL Market Engine
"""

from .equilibrium import cmd_equilibrium
from .simulate import cmd_simulate
from .contraction import cmd_contraction
from .generate import cmd_generate

__all__ = ["cmd_equilibrium", "cmd_simulate", "cmd_contraction", "cmd_generate"]
