# This file is part of QRMWave
# License: GPLv3 or later, at your choice. See <http://www.gnu.org/licenses/gpl>

"""Convenience package launcher. Allow `python -m qrmwave` invocation."""

from . import main

main.run()
