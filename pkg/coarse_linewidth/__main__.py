from coarse_linewidth.cli import main

raise SystemExit(main())
