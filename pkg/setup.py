#!/usr/bin/env python3
"""
Setup Script

License:

This file is part of the bilevelcuts repository.

bilevelcuts is licensed under the GNU General Public License v3
<https://www.gnu.org/licenses/gpl-3.0.en.html>.
"""

import setuptools

if __name__ == "__main__":
    setuptools.setup()
